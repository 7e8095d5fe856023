#include "orchestrion/device.hpp"

namespace orchestrion {

Device::Device(DeviceId id, HostConfig host, Registry& registry, const DeviceOptions& options, EventLog* log)
    : id_(id), bus_(id), host_(std::move(host)), knowledge_(options.monitor.retention_s),
      deployer_(bus_, knowledge_, host_, registry, options.policy, log),
      analyzer_(bus_, knowledge_, host_, options.policy, options.forecast.horizon, log),
      forecaster_(bus_, knowledge_, options.forecast, options.policy.optimization_interval_s),
      monitor_(bus_, knowledge_, host_, &registry, options.policy, options.monitor, log)
{
    bus_.set_clock([this] { return host_.now(); });
    for (const auto& sub : deployer_.subscriptions()) {
        handlers_[sub.get()] = [this](const Subscription& from, const Message& msg) { deployer_.handle(from, msg); };
    }
    auto to_analyzer = [this](const Subscription&, const Message& msg) { analyzer_.handle(msg); };
    handlers_[analyzer_.analyze_subscription().get()] = to_analyzer;
    handlers_[analyzer_.forecast_subscription().get()] = to_analyzer;
    handlers_[forecaster_.subscription().get()] = [this](const Subscription&, const Message& msg) {
        forecaster_.handle(msg);
    };
}

bool Device::pump_one()
{
    auto delivery = bus_.poll();
    if (!delivery) {
        return false;
    }
    if (auto it = handlers_.find(delivery->subscription); it != handlers_.end()) {
        it->second(*delivery->subscription, delivery->msg);
    }
    return true;
}

std::vector<BridgeRule> cluster_bridge_rules()
{
    return {
        BridgeRule{Topic::monitor, [](const Message& m) { return m.action == Action::monitoring_result; }},
        BridgeRule{Topic::deploy,
                   [](const Message& m) {
                       return m.action == Action::deployment_request && m.payload.value("attempt", 1) == 1;
                   }},
    };
}

void connect_cluster(const std::vector<Device*>& devices)
{
    for (Device* d : devices) {
        std::vector<Bus*> peers;
        for (Device* other : devices) {
            if (other != d) {
                peers.push_back(&other->bus());
            }
        }
        d->bus().bridge(peers, cluster_bridge_rules());
        d->deployer().set_cluster_mode(!peers.empty());
    }
}

} // namespace orchestrion
