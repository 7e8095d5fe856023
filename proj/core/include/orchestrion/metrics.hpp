#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "orchestrion/model.hpp"

namespace orchestrion {

enum class ContainerStatus : std::uint8_t { running, killed_oom, stopped };

std::string_view to_string(ContainerStatus status);
ContainerStatus parse_container_status(std::string_view text);

/// One container's view over a sampling window.
struct ContainerSample {
    ContainerId id;
    /// cpu: mean granted mCPU over the window; mem: peak MB within the window.
    double cpu_util = 0.0;
    double mem_util = 0.0;
    /// Percentage of enforcement periods in the window where demand exceeded the grant.
    double throttle_pct = 0.0;
    LimitSet limits;
    ContainerStatus status = ContainerStatus::running;
};

struct MetricsSample {
    std::int64_t timestamp = 0;
    std::vector<ContainerSample> containers;
    PerResource<double> total;
    /// S^avail: capacity minus utilization of running containers.
    PerResource<double> avail;
    /// Capacity minus the current limits of running containers.
    PerResource<std::int64_t> allocatable;
};

struct SeriesPoint {
    std::int64_t t = 0;
    double cpu_util = 0.0;
    double mem_util = 0.0;
    double throttle_pct = 0.0;
    std::int64_t cpu_limit = 0;
    std::int64_t mem_limit = 0;

    bool operator==(const SeriesPoint&) const = default;
};

/// Short-term per-container (or host) history kept by the monitor.
struct MetricsSeries {
    std::string key;
    std::int64_t retention_s = 86400;
    std::vector<SeriesPoint> points;

    /// Throws ContractViolation if `point.t` does not strictly follow the last timestamp.
    void append(const SeriesPoint& point);
    [[nodiscard]] bool empty() const noexcept { return points.empty(); }

    bool operator==(const MetricsSeries&) const = default;
};

void to_json(nlohmann::json& j, const SeriesPoint& p);
void from_json(const nlohmann::json& j, SeriesPoint& p);
void to_json(nlohmann::json& j, const MetricsSeries& s);
void from_json(const nlohmann::json& j, MetricsSeries& s);

/// Canonical byte encoding used for archiving.
std::string serialize(const MetricsSeries& series);
MetricsSeries deserialize_series(std::string_view bytes);

} // namespace orchestrion
