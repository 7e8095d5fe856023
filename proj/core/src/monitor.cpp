#include "orchestrion/monitor.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

namespace orchestrion {

void MonitorConfig::validate() const
{
    if (scrape_interval_s <= 0 || retention_s <= 0 || archive_every_s <= 0) {
        throw ConfigError("monitor: intervals must be > 0");
    }
    if (max_attempts < 1) {
        throw ConfigError("monitor: max_attempts must be >= 1");
    }
}

void to_json(nlohmann::json& j, const MonitorConfig& c)
{
    j = nlohmann::json{{"scrape_interval_s", c.scrape_interval_s},
                       {"max_attempts", c.max_attempts},
                       {"retention_s", c.retention_s},
                       {"archive_every_s", c.archive_every_s}};
}

void from_json(const nlohmann::json& j, MonitorConfig& c)
{
    c.scrape_interval_s = j.value("scrape_interval_s", c.scrape_interval_s);
    c.max_attempts = j.value("max_attempts", c.max_attempts);
    c.retention_s = j.value("retention_s", c.retention_s);
    c.archive_every_s = j.value("archive_every_s", c.archive_every_s);
    c.validate();
}

LimitSet retry_target(int attempt, const LimitSet& request, const LimitSet& base, const LimitSet& last_target,
                      const OptimizationPolicy& policy, ResourceAmount mem_max)
{
    if (attempt < 1) {
        throw ContractViolation("retry_target: attempt must be >= 1");
    }
    if (attempt == 1) {
        return request;
    }
    LimitSet out;
    out.set(ResourceKind::cpu, last_target.has(ResourceKind::cpu) ? last_target[ResourceKind::cpu]
                                                                  : base[ResourceKind::cpu]);
    const std::int64_t steps = attempt - 2;
    const std::int64_t mem = base[ResourceKind::mem].value() + steps * policy.scale_up[ResourceKind::mem].value();
    out.set(ResourceKind::mem, std::min(ResourceAmount{mem}, std::max(mem_max, base[ResourceKind::mem])));
    return out;
}

nlohmann::json monitoring_payload(const DeviceId& device, const MetricsSample& sample)
{
    nlohmann::json containers = nlohmann::json::array();
    for (const auto& c : sample.containers) {
        containers.push_back(nlohmann::json{{"id", c.id.str()},
                                            {"cpu_util", c.cpu_util},
                                            {"mem_util", c.mem_util},
                                            {"throttle_pct", c.throttle_pct},
                                            {"limits", c.limits},
                                            {"status", std::string(to_string(c.status))}});
    }
    auto per = [](const auto& v) { return nlohmann::json{{"cpu", v[ResourceKind::cpu]}, {"mem", v[ResourceKind::mem]}}; };
    return nlohmann::json{{"device", device.str()},
                          {"timestamp", sample.timestamp},
                          {"containers", std::move(containers)},
                          {"total", per(sample.total)},
                          {"avail", per(sample.avail)},
                          {"allocatable", per(sample.allocatable)}};
}

Monitor::Monitor(Bus& bus, Knowledge& knowledge, Host& host, Registry* registry, OptimizationPolicy policy,
                 MonitorConfig config, EventLog* log)
    : bus_(bus), knowledge_(knowledge), host_(host), registry_(registry), policy_(std::move(policy)), config_(config),
      log_(log)
{
    config_.validate();
}

void Monitor::log(const std::string& type, nlohmann::json data) const
{
    if (log_ != nullptr) {
        log_->append(Event{host_.now(), bus_.self().str(), type, std::move(data)});
    }
}

MetricsSample Monitor::scrape_and_publish()
{
    MetricsSample sample = host_.sample_metrics();
    knowledge_.record(sample);
    Message msg;
    msg.action = Action::monitoring_result;
    msg.payload = monitoring_payload(bus_.self(), sample);
    bus_.publish(Topic::monitor, std::move(msg));
    return sample;
}

std::vector<Message> Monitor::detect_premature_exit(const std::vector<HostEvent>& events)
{
    std::vector<Message> published;
    const ResourceAmount mem_max = policy_.effective_mem_max(host_.config().total[ResourceKind::mem]);
    for (const auto& ev : events) {
        if (!knowledge_.has_container(ev.id)) {
            continue;
        }
        ContainerRecord& rec = knowledge_.container(ev.id);
        rec.status = ev.kind == HostEventKind::oom_kill ? ContainerStatus::killed_oom : ContainerStatus::stopped;
        log(std::string(to_string(ev.kind)), nlohmann::json{{"container", ev.id.str()},
                                                            {"deployment", rec.deployment.str()},
                                                            {"attempt", rec.attempt},
                                                            {"mem_demand", ev.mem_demand},
                                                            {"mem_limit", ev.mem_limit},
                                                            {"host_pressure", ev.host_pressure}});
        if (ev.kind != HostEventKind::oom_kill || !knowledge_.has_deployment(rec.deployment)) {
            continue;
        }
        DeploymentRecord& dep = knowledge_.deployment(rec.deployment);
        const int next = rec.attempt + 1;
        if (next > config_.max_attempts) {
            dep.state = DeploymentState::failed;
            dep.reason = "retry attempts exhausted";
            log("give_up", nlohmann::json{{"deployment", dep.id.str()}, {"attempts", rec.attempt}});
            continue;
        }
        const LimitSet target = retry_target(next, dep.request, dep.base, rec.limits, policy_, mem_max);
        Message msg;
        msg.action = Action::deployment_request;
        msg.payload = nlohmann::json{{"deployment_id", dep.id.str()},
                                     {"owner", dep.owner.str()},
                                     {"image", dep.image.str()},
                                     {"attempt", next},
                                     {"role", next == 2 ? "base" : "escalated"},
                                     {"target", target}};
        log("retry", nlohmann::json{{"deployment", dep.id.str()}, {"attempt", next}, {"target", target}});
        published.push_back(msg);
        bus_.publish(Topic::deploy, std::move(msg));
    }
    return published;
}

std::vector<ContentHash> Monitor::enforce_retention(bool force)
{
    std::vector<ContentHash> written;
    const std::int64_t now = host_.now();
    if (!force && now - last_retention_check_ < config_.archive_every_s) {
        return written;
    }
    last_retention_check_ = now;
    if (registry_ == nullptr) {
        return written;
    }
    const std::int64_t cutoff = now - config_.retention_s;
    for (const auto& key : knowledge_.series_keys()) {
        MetricsSeries* series = knowledge_.series_mut(key);
        auto split = std::find_if(series->points.begin(), series->points.end(),
                                  [&](const SeriesPoint& p) { return p.t >= cutoff; });
        if (split == series->points.begin()) {
            continue;
        }
        MetricsSeries old;
        old.key = series->key;
        old.retention_s = series->retention_s;
        old.points.assign(series->points.begin(), split);
        try {
            const ContentHash hash = registry_->archive_metrics(bus_.self(), old);
            series->points.erase(series->points.begin(), split);
            written.push_back(hash);
            log("archive", nlohmann::json{{"series", key}, {"points", old.points.size()}, {"hash", hash.hex}});
        } catch (const std::exception& e) {
            log("archive_failed", nlohmann::json{{"series", key}, {"error", e.what()}});
        }
    }
    return written;
}

std::size_t Monitor::schedule_optimization()
{
    const std::int64_t now = host_.now();
    std::vector<ContainerId> due;
    for (const auto& id : knowledge_.active_containers()) {
        if (knowledge_.container(id).next_optimization <= now) {
            due.push_back(id);
        }
    }
    if (due.empty()) {
        return 0;
    }
    const std::string cycle = bus_.self().str() + "/cycle" + std::to_string(++next_cycle_);
    for (const auto& id : due) {
        ContainerRecord& rec = knowledge_.container(id);
        while (rec.next_optimization <= now) {
            rec.next_optimization += policy_.optimization_interval_s;
        }
        Message msg;
        msg.action = Action::deployment_optimization_request;
        msg.payload = nlohmann::json{{"container_id", id.str()}, {"cycle", cycle}, {"batch", due.size()}};
        bus_.publish(Topic::analyze, std::move(msg));
    }
    return due.size();
}

} // namespace orchestrion
