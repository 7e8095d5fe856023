#include "orchestrion/deployer.hpp"

#include <nlohmann/json.hpp>

namespace orchestrion {

DeviceId cluster_select(const AvailabilityTable& table, ResourceKind dominant, const DeviceId& self)
{
    if (table.empty()) {
        return self;
    }
    const ResourceKind other = dominant == ResourceKind::cpu ? ResourceKind::mem : ResourceKind::cpu;
    const DeviceId* best = nullptr;
    const AvailabilityEntry* best_entry = nullptr;
    // std::map iterates in ascending address order, so keeping the first maximum breaks ties by smallest address.
    for (const auto& [device, entry] : table) {
        if (best == nullptr) {
            best = &device;
            best_entry = &entry;
            continue;
        }
        const auto a = entry.allocatable[dominant];
        const auto b = best_entry->allocatable[dominant];
        if (a > b || (a == b && entry.allocatable[other] > best_entry->allocatable[other])) {
            best = &device;
            best_entry = &entry;
        }
    }
    return *best;
}

bool maintain_table(AvailabilityTable& table, const DeviceId& origin, const AvailabilityEntry& entry)
{
    auto it = table.find(origin);
    if (it != table.end() && entry.timestamp < it->second.timestamp) {
        return false;
    }
    table.insert_or_assign(origin, entry);
    return true;
}

AvailabilityEntry entry_from_monitoring(const nlohmann::json& payload)
{
    AvailabilityEntry e;
    const auto& avail = payload.at("avail");
    const auto& alloc = payload.at("allocatable");
    e.avail = PerResource<double>{avail.at("cpu").get<double>(), avail.at("mem").get<double>()};
    e.allocatable = PerResource<std::int64_t>{alloc.at("cpu").get<std::int64_t>(), alloc.at("mem").get<std::int64_t>()};
    e.timestamp = payload.at("timestamp").get<std::int64_t>();
    return e;
}

WorkloadSpec workload_from_blob(const ImageBlob& blob)
{
    if (blob.layers.empty()) {
        throw ProtocolError("image has no layers");
    }
    const auto& layer = blob.layers.front();
    try {
        return nlohmann::json::parse(layer.begin(), layer.end()).at("workload").get<WorkloadSpec>();
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("image config layer: ") + e.what());
    }
}

ImageBlob blob_for_workload(const WorkloadSpec& spec)
{
    ImageBlob blob;
    blob.layers.push_back(to_bytes(nlohmann::json{{"workload", spec}}.dump()));
    blob.layers.push_back(to_bytes("workload-runtime pattern=" + std::to_string(spec.pattern) + " class=" +
                                   std::string(to_string(spec.cls))));
    return blob;
}

Deployer::Deployer(Bus& bus, Knowledge& knowledge, Host& host, const Registry& registry, OptimizationPolicy policy,
                   EventLog* log)
    : bus_(bus), knowledge_(knowledge), host_(host), registry_(registry), policy_(std::move(policy)), log_(log),
      deploy_(bus.subscribe(Topic::deploy)), cluster_deploy_(bus.subscribe(Topic::cluster_deploy)),
      monitor_(bus.subscribe(Topic::monitor)), cluster_monitor_(bus.subscribe(Topic::cluster_monitor))
{
}

std::vector<std::shared_ptr<Subscription>> Deployer::subscriptions() const
{
    return {deploy_, cluster_deploy_, monitor_, cluster_monitor_};
}

void Deployer::log(const std::string& type, nlohmann::json data) const
{
    if (log_ != nullptr) {
        log_->append(Event{host_.now(), bus_.self().str(), type, std::move(data)});
    }
}

DeploymentId Deployer::submit(const OwnerId& owner, const ImageName& image, std::optional<DeploymentId> id)
{
    DeploymentId dep = id ? *id : DeploymentId{bus_.self().str() + "-d" + std::to_string(++next_submit_)};
    Message msg;
    msg.action = Action::deployment_request;
    msg.payload = nlohmann::json{{"deployment_id", dep.str()}, {"owner", owner.str()}, {"image", image.str()}, {"attempt", 1}};
    bus_.publish(Topic::deploy, std::move(msg));
    return dep;
}

void Deployer::handle(const Subscription& from, const Message& msg)
{
    const Topic topic = from.topic();
    if (topic == Topic::monitor || topic == Topic::cluster_monitor) {
        if (msg.action == Action::monitoring_result) {
            maintain_table(table_, DeviceId{msg.payload.at("device").get<std::string>()},
                           entry_from_monitoring(msg.payload));
        }
        return;
    }
    switch (msg.action) {
    case Action::deployment_request:
        on_request(msg, topic == Topic::cluster_deploy);
        break;
    case Action::deployment_accept:
        if (topic == Topic::deploy) {
            on_accept(msg);
        }
        break;
    case Action::deployment_cancel:
        if (topic == Topic::deploy) {
            on_cancel(msg);
        }
        break;
    case Action::deployment_update:
        if (topic == Topic::deploy) {
            on_update(msg);
        }
        break;
    default:
        break;
    }
}

void Deployer::request_analysis(DeploymentRecord& dep, const std::string& role, const LimitSet& target)
{
    dep.role = role;
    dep.target = target;
    dep.state = DeploymentState::analyzing;
    Message msg;
    msg.action = Action::deployment_analysis_request;
    msg.payload = nlohmann::json{{"deployment_id", dep.id.str()}, {"target", target}, {"role", role},
                                 {"attempt", dep.attempt}};
    bus_.publish(Topic::analyze, std::move(msg));
}

void Deployer::reject(DeploymentRecord& dep, const std::string& reason)
{
    dep.state = dep.attempt > 1 ? DeploymentState::failed : DeploymentState::rejected;
    dep.reason = reason;
    knowledge_.release(dep.id);
    log("rejected", nlohmann::json{{"deployment", dep.id.str()}, {"attempt", dep.attempt}, {"reason", reason}});
}

void Deployer::on_request(const Message& msg, bool from_cluster)
{
    const auto& p = msg.payload;
    const DeploymentId id{p.at("deployment_id").get<std::string>()};
    const int attempt = p.value("attempt", 1);

    if (attempt > 1) {
        if (from_cluster || !knowledge_.has_deployment(id)) {
            return;
        }
        DeploymentRecord& dep = knowledge_.deployment(id);
        dep.attempt = attempt;
        request_analysis(dep, p.value("role", std::string("escalated")), p.at("target").get<LimitSet>());
        return;
    }
    if (knowledge_.has_deployment(id) || foreign_.contains(id)) {
        return;
    }

    DeploymentRecord dep;
    dep.id = id;
    dep.owner = OwnerId{p.at("owner").get<std::string>()};
    dep.image = ImageName{p.at("image").get<std::string>()};
    dep.submitted_at = host_.now();

    ImageRecord image;
    try {
        image = registry_.get_image(dep.owner, dep.image);
        dep.spec = workload_from_blob(registry_.fetch_blob(image.image_hash));
    } catch (const std::exception& e) {
        if (from_cluster) {
            // The receiving device reports the failure; peers stay silent.
            return;
        }
        DeploymentRecord& stored = knowledge_.put_deployment(std::move(dep));
        reject(stored, std::string("image unavailable: ") + e.what());
        return;
    }
    dep.request = image.request();
    dep.base = image.base();

    if (cluster_mode_) {
        const DeviceId executor = cluster_select(table_, dominant_kind(dep.spec.cls), bus_.self());
        if (executor != bus_.self()) {
            foreign_[id] = nlohmann::json{{"id", id.str()},
                                          {"state", std::string(to_string(DeploymentState::not_selected))},
                                          {"executor", executor.str()}};
            return;
        }
        nlohmann::json table = nlohmann::json::object();
        for (const auto& [device, entry] : table_) {
            table[device.str()] = entry.allocatable[dominant_kind(dep.spec.cls)];
        }
        log("cluster_select", nlohmann::json{{"deployment", id.str()}, {"executor", bus_.self().str()},
                                             {"origin", msg.origin.str()}, {"table", std::move(table)}});
    }

    DeploymentRecord& stored = knowledge_.put_deployment(std::move(dep));
    request_analysis(stored, "request", stored.request);
}

void Deployer::on_accept(const Message& msg)
{
    const auto& p = msg.payload;
    const DeploymentId id{p.at("deployment_id").get<std::string>()};
    if (!knowledge_.has_deployment(id)) {
        return;
    }
    DeploymentRecord& dep = knowledge_.deployment(id);
    if (dep.state != DeploymentState::analyzing || p.value("attempt", 1) != dep.attempt) {
        return;
    }
    knowledge_.release(id);
    const LimitSet target = p.at("target").get<LimitSet>();
    const ContainerId cid{dep.attempt == 1 ? id.str() : id.str() + ".r" + std::to_string(dep.attempt - 1)};
    try {
        host_.run_container(cid, dep.spec, target, dep.attempt - 1);
    } catch (const std::exception& e) {
        log("execution_failed", nlohmann::json{{"deployment", id.str()}, {"error", e.what()}});
        Message cancel;
        cancel.action = Action::deployment_cancel;
        cancel.correlation_id = msg.id;
        cancel.payload = p;
        cancel.payload["reason"] = std::string("execution failed: ") + e.what();
        bus_.publish(Topic::deploy, std::move(cancel));
        return;
    }

    ContainerRecord rec;
    rec.id = cid;
    rec.deployment = id;
    rec.attempt = dep.attempt;
    rec.cls = dep.spec.cls;
    rec.limits = target;
    rec.started_at = host_.now();
    rec.next_optimization = host_.now() + policy_.warmup_s;
    knowledge_.add_container(std::move(rec));

    dep.state = DeploymentState::running;
    dep.container = cid;
    log("deployed", nlohmann::json{{"deployment", id.str()}, {"container", cid.str()}, {"attempt", dep.attempt},
                                   {"role", dep.role}, {"limits", target}});
}

void Deployer::on_cancel(const Message& msg)
{
    const auto& p = msg.payload;
    const DeploymentId id{p.at("deployment_id").get<std::string>()};
    if (!knowledge_.has_deployment(id)) {
        return;
    }
    DeploymentRecord& dep = knowledge_.deployment(id);
    if (dep.state != DeploymentState::analyzing || p.value("attempt", 1) != dep.attempt ||
        p.value("role", std::string("request")) != dep.role) {
        return;
    }
    knowledge_.release(id);
    if (dep.attempt == 1 && dep.role == "request") {
        request_analysis(dep, "base", dep.base);
        return;
    }
    reject(dep, p.value("reason", std::string("not admitted")));
}

void Deployer::on_update(const Message& msg)
{
    const ContainerId cid{msg.payload.at("container_id").get<std::string>()};
    const LimitSet target = msg.payload.at("target").get<LimitSet>();
    if (!host_.is_running(cid)) {
        return;
    }
    host_.update_limits(cid, target);
    if (knowledge_.has_container(cid)) {
        knowledge_.container(cid).limits = target;
    }
}

std::optional<nlohmann::json> Deployer::status(const DeploymentId& id) const
{
    if (knowledge_.has_deployment(id)) {
        const DeploymentRecord& dep = knowledge_.deployment(id);
        nlohmann::json j{{"id", id.str()},
                         {"state", std::string(to_string(dep.state))},
                         {"executor", bus_.self().str()},
                         {"owner", dep.owner.str()},
                         {"image", dep.image.str()},
                         {"attempt", dep.attempt},
                         {"role", dep.role}};
        if (dep.target.has(ResourceKind::cpu)) {
            j["target"] = dep.target;
        }
        if (dep.container) {
            j["container"] = dep.container->str();
            if (knowledge_.has_container(*dep.container)) {
                j["limits"] = knowledge_.container(*dep.container).limits;
            }
        }
        if (!dep.reason.empty()) {
            j["reason"] = dep.reason;
        }
        return std::optional<nlohmann::json>(std::in_place, std::move(j));
    }
    if (auto it = foreign_.find(id); it != foreign_.end()) {
        return std::optional<nlohmann::json>(std::in_place, it->second);
    }
    return std::nullopt;
}

} // namespace orchestrion
