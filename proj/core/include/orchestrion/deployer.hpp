#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "orchestrion/bus.hpp"
#include "orchestrion/hostsim.hpp"
#include "orchestrion/knowledge.hpp"
#include "orchestrion/registry.hpp"

namespace orchestrion {

struct AvailabilityEntry {
    /// Capacity minus current utilization.
    PerResource<double> avail{0.0, 0.0};
    /// Capacity minus current limits; the selection key.
    PerResource<std::int64_t> allocatable{0, 0};
    std::int64_t timestamp = 0;
};

using AvailabilityTable = std::map<DeviceId, AvailabilityEntry>;

/// Device with the most allocatable `dominant` resource, then the most of the other kind, then the smallest
/// address. An empty table selects `self`.
DeviceId cluster_select(const AvailabilityTable& table, ResourceKind dominant, const DeviceId& self);

/// Replaces the entry for `origin` unless `entry` is older than what the table holds. Returns whether it changed.
bool maintain_table(AvailabilityTable& table, const DeviceId& origin, const AvailabilityEntry& entry);

AvailabilityEntry entry_from_monitoring(const nlohmann::json& payload);

/// Reads the workload definition carried in an image's first layer.
WorkloadSpec workload_from_blob(const ImageBlob& blob);
ImageBlob blob_for_workload(const WorkloadSpec& spec);

class Deployer {
public:
    Deployer(Bus& bus, Knowledge& knowledge, Host& host, const Registry& registry, OptimizationPolicy policy,
             EventLog* log);

    /// Turns on peer-aware selection for external requests.
    void set_cluster_mode(bool enabled) noexcept { cluster_mode_ = enabled; }
    [[nodiscard]] bool cluster_mode() const noexcept { return cluster_mode_; }

    [[nodiscard]] std::vector<std::shared_ptr<Subscription>> subscriptions() const;
    void handle(const Subscription& from, const Message& msg);

    /// Publishes an external DeploymentRequest and returns its deployment id.
    DeploymentId submit(const OwnerId& owner, const ImageName& image, std::optional<DeploymentId> id = std::nullopt);

    [[nodiscard]] const AvailabilityTable& table() const noexcept { return table_; }
    /// Status document for `id`, or nullopt when this device never saw it.
    [[nodiscard]] std::optional<nlohmann::json> status(const DeploymentId& id) const;

private:
    void on_request(const Message& msg, bool from_cluster);
    void on_accept(const Message& msg);
    void on_cancel(const Message& msg);
    void on_update(const Message& msg);
    void request_analysis(DeploymentRecord& dep, const std::string& role, const LimitSet& target);
    void reject(DeploymentRecord& dep, const std::string& reason);
    void log(const std::string& type, nlohmann::json data) const;

    Bus& bus_;
    Knowledge& knowledge_;
    Host& host_;
    const Registry& registry_;
    OptimizationPolicy policy_;
    EventLog* log_;
    bool cluster_mode_ = false;
    std::shared_ptr<Subscription> deploy_;
    std::shared_ptr<Subscription> cluster_deploy_;
    std::shared_ptr<Subscription> monitor_;
    std::shared_ptr<Subscription> cluster_monitor_;
    AvailabilityTable table_;
    std::map<DeploymentId, nlohmann::json> foreign_;
    std::uint64_t next_submit_ = 0;
};

} // namespace orchestrion
