#include "orchestrion/knowledge.hpp"

#include <algorithm>
#include <sstream>

namespace orchestrion {

void to_json(nlohmann::json& j, const Event& e)
{
    j = nlohmann::json{{"t", e.t}, {"device", e.device}, {"type", e.type}, {"data", e.data}};
}

void EventLog::append(Event event)
{
    std::lock_guard lock(mutex_);
    events_.push_back(std::move(event));
}

std::vector<Event> EventLog::entries() const
{
    std::lock_guard lock(mutex_);
    return events_;
}

std::vector<Event> EventLog::of_type(const std::string& type) const
{
    std::lock_guard lock(mutex_);
    std::vector<Event> out;
    std::copy_if(events_.begin(), events_.end(), std::back_inserter(out),
                 [&](const Event& e) { return e.type == type; });
    return out;
}

std::string EventLog::to_jsonl() const
{
    std::lock_guard lock(mutex_);
    std::ostringstream out;
    for (const auto& e : events_) {
        out << nlohmann::json(e).dump() << '\n';
    }
    return out.str();
}

std::string_view to_string(DeploymentState state)
{
    switch (state) {
    case DeploymentState::pending:
        return "pending";
    case DeploymentState::analyzing:
        return "analyzing";
    case DeploymentState::running:
        return "running";
    case DeploymentState::rejected:
        return "rejected";
    case DeploymentState::failed:
        return "failed";
    case DeploymentState::not_selected:
        return "not_selected";
    }
    return "?";
}

DeploymentRecord& Knowledge::put_deployment(DeploymentRecord record)
{
    const DeploymentId id = record.id;
    auto [it, inserted] = deployments_.insert_or_assign(id, std::move(record));
    if (inserted) {
        deployment_order_.push_back(id);
    }
    return it->second;
}

bool Knowledge::has_deployment(const DeploymentId& id) const { return deployments_.contains(id); }

DeploymentRecord& Knowledge::deployment(const DeploymentId& id)
{
    auto it = deployments_.find(id);
    if (it == deployments_.end()) {
        throw NotFoundError("unknown deployment '" + id.str() + "'");
    }
    return it->second;
}

const DeploymentRecord& Knowledge::deployment(const DeploymentId& id) const
{
    return const_cast<Knowledge*>(this)->deployment(id);
}

std::vector<DeploymentId> Knowledge::deployments() const { return deployment_order_; }

ContainerRecord& Knowledge::add_container(ContainerRecord record)
{
    record.order = next_order_++;
    const ContainerId id = record.id;
    auto [it, inserted] = containers_.insert_or_assign(id, std::move(record));
    return it->second;
}

bool Knowledge::has_container(const ContainerId& id) const { return containers_.contains(id); }

ContainerRecord& Knowledge::container(const ContainerId& id)
{
    auto it = containers_.find(id);
    if (it == containers_.end()) {
        throw NotFoundError("unknown container '" + id.str() + "'");
    }
    return it->second;
}

const ContainerRecord& Knowledge::container(const ContainerId& id) const
{
    return const_cast<Knowledge*>(this)->container(id);
}

namespace {

std::vector<ContainerId> ordered_ids(const std::map<ContainerId, ContainerRecord>& containers, bool running_only)
{
    std::vector<const ContainerRecord*> picked;
    for (const auto& [id, rec] : containers) {
        if (!running_only || rec.status == ContainerStatus::running) {
            picked.push_back(&rec);
        }
    }
    std::sort(picked.begin(), picked.end(), [](auto* a, auto* b) { return a->order < b->order; });
    std::vector<ContainerId> out;
    out.reserve(picked.size());
    for (const auto* rec : picked) {
        out.push_back(rec->id);
    }
    return out;
}

} // namespace

std::vector<ContainerId> Knowledge::active_containers() const { return ordered_ids(containers_, true); }

std::vector<ContainerId> Knowledge::all_containers() const { return ordered_ids(containers_, false); }

void Knowledge::reserve(const DeploymentId& id, const LimitSet& target) { reservations_.insert_or_assign(id, target); }

void Knowledge::release(const DeploymentId& id) { reservations_.erase(id); }

std::vector<LimitSet> Knowledge::reservations() const
{
    std::vector<LimitSet> out;
    for (const auto& [id, limits] : reservations_) {
        out.push_back(limits);
    }
    return out;
}

void Knowledge::record(const MetricsSample& sample)
{
    for (const auto& cs : sample.containers) {
        auto [it, inserted] = series_.try_emplace(cs.id.str());
        if (inserted) {
            it->second.key = cs.id.str();
            it->second.retention_s = retention_s_;
        }
        it->second.append(SeriesPoint{sample.timestamp, cs.cpu_util, cs.mem_util, cs.throttle_pct,
                                      cs.limits[ResourceKind::cpu].value(), cs.limits[ResourceKind::mem].value()});
    }
    auto [host, inserted] = series_.try_emplace(kHostKey);
    if (inserted) {
        host->second.key = kHostKey;
        host->second.retention_s = retention_s_;
    }
    host->second.append(SeriesPoint{sample.timestamp, sample.total[ResourceKind::cpu] - sample.avail[ResourceKind::cpu],
                                    sample.total[ResourceKind::mem] - sample.avail[ResourceKind::mem], 0.0,
                                    sample.allocatable[ResourceKind::cpu], sample.allocatable[ResourceKind::mem]});
    last_sample_ = sample;
}

const MetricsSeries* Knowledge::series(const std::string& key) const
{
    auto it = series_.find(key);
    return it == series_.end() ? nullptr : &it->second;
}

MetricsSeries* Knowledge::series_mut(const std::string& key)
{
    auto it = series_.find(key);
    return it == series_.end() ? nullptr : &it->second;
}

std::vector<std::string> Knowledge::series_keys() const
{
    std::vector<std::string> out;
    for (const auto& [key, s] : series_) {
        out.push_back(key);
    }
    return out;
}

} // namespace orchestrion
