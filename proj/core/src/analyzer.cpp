#include "orchestrion/analyzer.hpp"

#include <algorithm>
#include <cmath>

namespace orchestrion {

namespace {

double max_of(std::span<const double> values)
{
    double m = 0.0;
    for (double v : values) {
        m = std::max(m, v);
    }
    return m;
}

nlohmann::json avail_json(const PerResource<double>& avail)
{
    return nlohmann::json{{"cpu", avail[ResourceKind::cpu]}, {"mem", avail[ResourceKind::mem]}};
}

} // namespace

double snap(double value) noexcept
{
    return std::round(value * 1e6) / 1e6;
}

PredictionSet predict_availability(std::span<const ContainerOutlook> containers, const LimitSet& capacity,
                                   const PerResource<ResourceAmount>& reserve, std::span<const LimitSet> reservations)
{
    PredictionSet out;
    double used_cpu = 0.0;
    double used_mem = 0.0;
    for (const auto& c : containers) {
        ContainerPrediction p;
        p.id = c.id;
        p.current = c.current;
        const double lc = static_cast<double>(c.current[ResourceKind::cpu].value());
        const double lm = static_cast<double>(c.current[ResourceKind::mem].value());
        if (c.forecast && !c.forecast->error && !c.forecast->cpu.empty() && !c.forecast->mem.empty()) {
            for (double v : c.forecast->cpu) {
                p.cpu.push_back(std::max(lc, v));
            }
            for (double v : c.forecast->mem) {
                p.mem.push_back(std::max(lm, v));
            }
            p.throttle = c.forecast->throttle;
            p.contribution = PerResource<double>{max_of(p.cpu), max_of(p.mem)};
        } else {
            p.forecast_missing = true;
            p.contribution = PerResource<double>{std::max(lc, c.last_util[ResourceKind::cpu]),
                                                 std::max(lm, c.last_util[ResourceKind::mem])};
        }
        used_cpu += p.contribution[ResourceKind::cpu];
        used_mem += p.contribution[ResourceKind::mem];
        out.containers.push_back(std::move(p));
    }
    for (const auto& r : reservations) {
        used_cpu += static_cast<double>(r[ResourceKind::cpu].value());
        used_mem += static_cast<double>(r[ResourceKind::mem].value());
    }
    out.avail = PerResource<double>{
        static_cast<double>(capacity[ResourceKind::cpu].value()) - used_cpu -
            static_cast<double>(reserve[ResourceKind::cpu].value()),
        static_cast<double>(capacity[ResourceKind::mem].value()) - used_mem -
            static_cast<double>(reserve[ResourceKind::mem].value()),
    };
    return out;
}

AdmissionVerdict admit(const LimitSet& target, const PredictionSet& pred)
{
    AdmissionVerdict v;
    v.target = target;
    v.avail = pred.avail;
    v.accept = true;
    for (auto kind : kResourceKinds) {
        if (!target.has(kind)) {
            continue;
        }
        const auto want = static_cast<double>(target[kind].value());
        if (!(want < snap(pred.avail[kind]))) {
            v.accept = false;
            v.reason = "insufficient " + std::string(to_string(kind)) + ": target " + std::to_string(target[kind].value()) +
                       " >= predicted availability " + std::to_string(pred.avail[kind]);
            break;
        }
    }
    return v;
}

ResourceAmount optimize_memory(ResourceAmount current, std::span<const double> predicted, double observed_peak,
                               const OptimizationPolicy& policy, ResourceAmount mem_max)
{
    if (predicted.empty()) {
        return current;
    }
    const ResourceAmount lo = std::min(policy.mem_min, mem_max);
    const double peak = snap(std::max(max_of(predicted), observed_peak));
    const double floor = snap(peak * policy.mem_margin);
    const double cur = static_cast<double>(current.value());

    if (floor > cur) {
        return clamp(current + policy.scale_up[ResourceKind::mem], lo, mem_max);
    }
    const std::int64_t lowered = std::max<std::int64_t>(0, current.value() - policy.scale_down[ResourceKind::mem].value());
    const ResourceAmount candidate = clamp(ResourceAmount{lowered}, lo, mem_max);
    if (candidate >= current || static_cast<double>(candidate.value()) < floor) {
        return current;
    }
    return candidate;
}

ResourceAmount optimize_cpu(ResourceAmount current, std::span<const double> predicted,
                            std::span<const double> predicted_throttle, const OptimizationPolicy& policy,
                            ResourceAmount cpu_max)
{
    if (predicted.empty()) {
        return current;
    }
    const ResourceAmount lo = std::min(policy.cpu_min, cpu_max);
    const double peak = snap(max_of(predicted));
    const double throttle = snap(max_of(predicted_throttle));
    const double cur = static_cast<double>(current.value());
    const std::int64_t up = policy.scale_up[ResourceKind::cpu].value();

    if (peak > cur) {
        return clamp(current + ResourceAmount{up}, lo, cpu_max);
    }
    if (throttle > policy.throttle_limit) {
        const auto adjusted = static_cast<std::int64_t>(std::ceil(snap(static_cast<double>(up) * throttle / 100.0)));
        return clamp(current + ResourceAmount{adjusted}, lo, cpu_max);
    }
    const auto buffered = static_cast<std::int64_t>(std::ceil(snap(peak * policy.buffer_cpu)));
    const std::int64_t lowered = current.value() - policy.scale_down[ResourceKind::cpu].value();
    const std::int64_t target = std::max(lowered, buffered);
    if (target >= current.value()) {
        return current;
    }
    return clamp(ResourceAmount{std::max<std::int64_t>(0, target)}, lo, cpu_max);
}

PredictionSet account_optimization(PredictionSet pred, const LimitDelta& delta)
{
    for (auto kind : kResourceKinds) {
        if (delta.has(kind)) {
            pred.avail.set(kind, pred.avail[kind] - static_cast<double>(delta[kind]));
        }
    }
    return pred;
}

Analyzer::Analyzer(Bus& bus, Knowledge& knowledge, const Host& host, OptimizationPolicy policy, int horizon,
                   EventLog* log)
    : bus_(bus), knowledge_(knowledge), host_(host), policy_(std::move(policy)), horizon_(horizon), log_(log),
      analyze_(bus.subscribe(Topic::analyze)), forecast_(bus.subscribe(Topic::forecast))
{
    policy_.validate();
}

void Analyzer::log(const std::string& type, nlohmann::json data) const
{
    if (log_ != nullptr) {
        log_->append(Event{host_.now(), bus_.self().str(), type, std::move(data)});
    }
}

void Analyzer::handle(const Message& msg)
{
    switch (msg.action) {
    case Action::deployment_analysis_request:
        queue_.push_back(Job{Job::Kind::admission, msg, {}, {}});
        break;
    case Action::deployment_optimization_request: {
        const auto cycle = msg.payload.at("cycle").get<std::string>();
        const auto batch = msg.payload.at("batch").get<std::size_t>();
        auto& members = batches_[cycle];
        members.push_back(msg.payload.at("container_id").get<std::string>());
        if (members.size() >= batch) {
            queue_.push_back(Job{Job::Kind::optimization, msg, cycle, std::move(members)});
            batches_.erase(cycle);
        }
        break;
    }
    case Action::forecast_response:
        if (in_flight_ && in_flight_->first == msg.correlation_id) {
            finish(msg);
        }
        break;
    default:
        break;
    }
    try_start();
}

void Analyzer::try_start()
{
    if (in_flight_ || queue_.empty()) {
        return;
    }
    Job job = std::move(queue_.front());
    queue_.pop_front();

    nlohmann::json ids = nlohmann::json::array();
    for (const auto& id : knowledge_.active_containers()) {
        ids.push_back(id.str());
    }
    Message request;
    request.action = Action::forecast_request;
    request.correlation_id = bus_.self().str() + "/job" + std::to_string(++next_job_);
    request.payload = nlohmann::json{{"containers", std::move(ids)}, {"horizon", horizon_}};
    in_flight_.emplace(request.correlation_id, std::move(job));
    bus_.publish(Topic::forecast, std::move(request));
}

PredictionSet Analyzer::predict(const std::vector<ContainerForecast>& forecasts) const
{
    std::vector<ContainerOutlook> outlook;
    const auto& last = knowledge_.last_sample();
    for (const auto& id : knowledge_.active_containers()) {
        const ContainerRecord& rec = knowledge_.container(id);
        ContainerOutlook o;
        o.id = id.str();
        o.current = rec.limits;
        auto it = std::find_if(forecasts.begin(), forecasts.end(),
                               [&](const ContainerForecast& f) { return f.id == id.str(); });
        if (it != forecasts.end() && !it->error) {
            o.forecast = *it;
        }
        if (last) {
            for (const auto& cs : last->containers) {
                if (cs.id == id) {
                    o.last_util = PerResource<double>{cs.cpu_util, cs.mem_util};
                }
            }
        }
        outlook.push_back(std::move(o));
    }
    const auto reservations = knowledge_.reservations();
    return predict_availability(outlook, host_.config().capacity(), policy_.reserve, reservations);
}

void Analyzer::finish(const Message& response)
{
    Job job = std::move(in_flight_->second);
    in_flight_.reset();
    std::vector<ContainerForecast> forecasts;
    for (const auto& r : response.payload.value("results", nlohmann::json::array())) {
        forecasts.push_back(r.get<ContainerForecast>());
    }
    PredictionSet pred = predict(forecasts);
    if (job.kind == Job::Kind::admission) {
        run_admission(job, pred);
    } else {
        run_optimization(job, std::move(pred), forecasts);
    }
}

void Analyzer::run_admission(const Job& job, const PredictionSet& pred)
{
    const auto& p = job.request.payload;
    const auto deployment = p.at("deployment_id").get<std::string>();
    const LimitSet target = p.at("target").get<LimitSet>();
    const AdmissionVerdict verdict = admit(target, pred);

    log("admission", nlohmann::json{{"deployment", deployment},
                                    {"role", p.value("role", std::string("request"))},
                                    {"attempt", p.value("attempt", 1)},
                                    {"decision", verdict.accept ? "accept" : "reject"},
                                    {"target", target},
                                    {"avail", avail_json(verdict.avail)}});

    if (verdict.accept) {
        knowledge_.reserve(DeploymentId{deployment}, target);
    }
    Message out;
    out.action = verdict.accept ? Action::deployment_accept : Action::deployment_cancel;
    out.correlation_id = job.request.id;
    out.payload = p;
    out.payload["avail"] = avail_json(verdict.avail);
    if (!verdict.accept) {
        out.payload["reason"] = verdict.reason;
    }
    bus_.publish(Topic::deploy, std::move(out));
}

void Analyzer::run_optimization(const Job& job, PredictionSet pred, const std::vector<ContainerForecast>& forecasts)
{
    const LimitSet capacity = host_.config().capacity();
    const ResourceAmount mem_max = policy_.effective_mem_max(host_.config().total[ResourceKind::mem]);

    std::vector<ContainerId> members;
    for (const auto& id : job.containers) {
        members.emplace_back(id);
    }
    std::sort(members.begin(), members.end(), [&](const ContainerId& a, const ContainerId& b) {
        const bool ha = knowledge_.has_container(a);
        const bool hb = knowledge_.has_container(b);
        if (ha != hb) {
            return ha;
        }
        return ha && knowledge_.container(a).order < knowledge_.container(b).order;
    });

    for (const auto& id : members) {
        if (!knowledge_.has_container(id)) {
            continue;
        }
        ContainerRecord& rec = knowledge_.container(id);
        if (rec.status != ContainerStatus::running) {
            continue;
        }
        rec.optimization_count += 1;
        auto f = std::find_if(forecasts.begin(), forecasts.end(),
                              [&](const ContainerForecast& c) { return c.id == id.str(); });
        if (f == forecasts.end() || f->error) {
            log("optimization", nlohmann::json{{"container", id.str()}, {"cycle", job.cycle}, {"skipped", "no forecast"}});
            continue;
        }

        const LimitSet current = rec.limits;
        LimitSet target = current;
        target.set(ResourceKind::mem, optimize_memory(current[ResourceKind::mem], f->mem, f->observed_mem_peak, policy_,
                                                      mem_max));
        target.set(ResourceKind::cpu, optimize_cpu(current[ResourceKind::cpu], f->cpu, f->throttle, policy_,
                                                   capacity[ResourceKind::cpu]));

        const LimitSet proposed = target;
        LimitDelta delta = delta_limit(target, current);
        for (auto kind : kResourceKinds) {
            if (delta[kind] > 0 && !(static_cast<double>(delta[kind]) < snap(pred.avail[kind]))) {
                target.set(kind, current[kind]);
                delta.set(kind, 0);
            }
        }
        pred = account_optimization(std::move(pred), delta);
        const bool changed = target != current;
        if (changed) {
            rec.last_change_cycle = rec.optimization_count;
        }

        log("optimization", nlohmann::json{{"container", id.str()},
                                           {"deployment", rec.deployment.str()},
                                           {"cycle", job.cycle},
                                           {"previous", current},
                                           {"proposed", proposed},
                                           {"target", target},
                                           {"changed", changed},
                                           {"avail_after", avail_json(pred.avail)}});
        if (changed) {
            Message update;
            update.action = Action::deployment_update;
            update.correlation_id = job.request.id;
            update.payload = nlohmann::json{{"container_id", id.str()},
                                            {"deployment_id", rec.deployment.str()},
                                            {"cycle", job.cycle},
                                            {"previous", current},
                                            {"target", target}};
            bus_.publish(Topic::deploy, std::move(update));
        }
    }
}

} // namespace orchestrion
