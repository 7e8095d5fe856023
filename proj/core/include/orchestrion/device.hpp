#pragma once

#include <functional>
#include <map>
#include <memory>
#include <vector>

#include "orchestrion/analyzer.hpp"
#include "orchestrion/bus.hpp"
#include "orchestrion/deployer.hpp"
#include "orchestrion/forecaster.hpp"
#include "orchestrion/hostsim.hpp"
#include "orchestrion/knowledge.hpp"
#include "orchestrion/monitor.hpp"
#include "orchestrion/registry.hpp"

namespace orchestrion {

struct DeviceOptions {
    OptimizationPolicy policy;
    ForecastConfig forecast;
    MonitorConfig monitor;
};

/// One edge device: a host, its bus, and the Monitor / Analyzer / Forecaster / Deployer components.
class Device {
public:
    Device(DeviceId id, HostConfig host, Registry& registry, const DeviceOptions& options, EventLog* log);
    Device(const Device&) = delete;
    Device& operator=(const Device&) = delete;

    [[nodiscard]] const DeviceId& id() const noexcept { return id_; }
    Bus& bus() noexcept { return bus_; }
    Host& host() noexcept { return host_; }
    Knowledge& knowledge() noexcept { return knowledge_; }
    Deployer& deployer() noexcept { return deployer_; }
    Analyzer& analyzer() noexcept { return analyzer_; }
    Forecaster& forecaster() noexcept { return forecaster_; }
    Monitor& monitor() noexcept { return monitor_; }
    [[nodiscard]] const Bus& bus() const noexcept { return bus_; }
    [[nodiscard]] const Host& host() const noexcept { return host_; }
    [[nodiscard]] const Knowledge& knowledge() const noexcept { return knowledge_; }
    [[nodiscard]] const Deployer& deployer() const noexcept { return deployer_; }

    /// Delivers the oldest pending message to its component. Returns false when nothing was pending.
    bool pump_one();

private:
    DeviceId id_;
    Bus bus_;
    Host host_;
    Knowledge knowledge_;
    Deployer deployer_;
    Analyzer analyzer_;
    Forecaster forecaster_;
    Monitor monitor_;
    std::map<const Subscription*, std::function<void(const Subscription&, const Message&)>> handlers_;
};

/// Shares monitor results and external deployment requests between every pair of devices.
void connect_cluster(const std::vector<Device*>& devices);

/// Bridge rules used by connect_cluster.
std::vector<BridgeRule> cluster_bridge_rules();

} // namespace orchestrion
