#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "orchestrion/hostsim.hpp"
#include "orchestrion/metrics.hpp"
#include "orchestrion/model.hpp"

namespace orchestrion {

/// One line of a run's decision log.
struct Event {
    std::int64_t t = 0;
    std::string device;
    std::string type;
    nlohmann::json data = nlohmann::json::object();
};

void to_json(nlohmann::json& j, const Event& e);

/// Append-only, thread-safe record of decisions shared by every device of a run.
class EventLog {
public:
    void append(Event event);
    [[nodiscard]] std::vector<Event> entries() const;
    [[nodiscard]] std::vector<Event> of_type(const std::string& type) const;
    /// One compact JSON object per line, in append order.
    [[nodiscard]] std::string to_jsonl() const;

private:
    mutable std::mutex mutex_;
    std::vector<Event> events_;
};

enum class DeploymentState : std::uint8_t { pending, analyzing, running, rejected, failed, not_selected };

std::string_view to_string(DeploymentState state);

struct DeploymentRecord {
    DeploymentId id;
    OwnerId owner;
    ImageName image;
    WorkloadSpec spec;
    LimitSet request;
    LimitSet base;
    int attempt = 1;
    /// request | base | escalated
    std::string role = "request";
    LimitSet target;
    DeploymentState state = DeploymentState::pending;
    std::optional<ContainerId> container;
    std::string reason;
    std::int64_t submitted_at = 0;
};

struct ContainerRecord {
    ContainerId id;
    DeploymentId deployment;
    int attempt = 1;
    WorkloadClass cls = WorkloadClass::mem_dominant;
    LimitSet limits;
    std::int64_t started_at = 0;
    std::uint64_t order = 0;
    ContainerStatus status = ContainerStatus::running;
    std::int64_t next_optimization = 0;
    int optimization_count = 0;
    int last_change_cycle = 0;

    /// No limit change during the last two optimization cycles.
    [[nodiscard]] bool stable() const noexcept
    {
        return optimization_count >= 2 && optimization_count - last_change_cycle >= 2;
    }
};

/// Per-device shared state of the control loop: deployments, containers, short-term metric series.
class Knowledge {
public:
    explicit Knowledge(std::int64_t retention_s = 86400) : retention_s_(retention_s) {}

    DeploymentRecord& put_deployment(DeploymentRecord record);
    [[nodiscard]] bool has_deployment(const DeploymentId& id) const;
    DeploymentRecord& deployment(const DeploymentId& id);
    [[nodiscard]] const DeploymentRecord& deployment(const DeploymentId& id) const;
    [[nodiscard]] std::vector<DeploymentId> deployments() const;

    ContainerRecord& add_container(ContainerRecord record);
    [[nodiscard]] bool has_container(const ContainerId& id) const;
    ContainerRecord& container(const ContainerId& id);
    [[nodiscard]] const ContainerRecord& container(const ContainerId& id) const;
    /// Running containers, oldest first.
    [[nodiscard]] std::vector<ContainerId> active_containers() const;
    [[nodiscard]] std::vector<ContainerId> all_containers() const;

    /// Accepted targets whose containers have not started yet.
    void reserve(const DeploymentId& id, const LimitSet& target);
    void release(const DeploymentId& id);
    [[nodiscard]] std::vector<LimitSet> reservations() const;

    /// Appends one point per container in `sample` plus a host point.
    void record(const MetricsSample& sample);
    [[nodiscard]] const MetricsSeries* series(const std::string& key) const;
    MetricsSeries* series_mut(const std::string& key);
    [[nodiscard]] std::vector<std::string> series_keys() const;
    [[nodiscard]] std::int64_t retention_s() const noexcept { return retention_s_; }
    [[nodiscard]] const std::optional<MetricsSample>& last_sample() const noexcept { return last_sample_; }

    static constexpr const char* kHostKey = "host";

private:
    std::int64_t retention_s_;
    std::uint64_t next_order_ = 0;
    std::map<DeploymentId, DeploymentRecord> deployments_;
    std::vector<DeploymentId> deployment_order_;
    std::map<ContainerId, ContainerRecord> containers_;
    std::map<DeploymentId, LimitSet> reservations_;
    std::map<std::string, MetricsSeries> series_;
    std::optional<MetricsSample> last_sample_;
};

} // namespace orchestrion
