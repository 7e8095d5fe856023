#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "orchestrion/metrics.hpp"
#include "orchestrion/model.hpp"

namespace orchestrion {

enum class WorkloadClass : std::uint8_t { cpu_dominant, mem_dominant };

std::string_view to_string(WorkloadClass cls);
WorkloadClass parse_workload_class(std::string_view text);
ResourceKind dominant_kind(WorkloadClass cls) noexcept;

inline constexpr int kPatternCount = 5;
inline constexpr int kPatternSegments = 6;

/// Reference peak for pattern 1..5 of the given class (MB for memory, mCPU for cpu).
std::int64_t default_peak(int pattern, WorkloadClass cls);

struct WorkloadSpec {
    int pattern = 1;
    WorkloadClass cls = WorkloadClass::mem_dominant;
    std::int64_t period_s = 60;
    /// Peak of the dominant resource.
    std::int64_t peak = 95;
    /// Constant demand of the other resource.
    std::int64_t secondary = 10;
    /// Only pattern 4 consumes it.
    std::uint64_t seed = 0;

    /// Pattern in range, positive period and peak, period divisible by the segment count.
    void validate() const;
    bool operator==(const WorkloadSpec&) const = default;
};

/// Builds a spec with the reference peak and the class default for the other resource.
WorkloadSpec make_workload(int pattern, WorkloadClass cls, std::int64_t period_s = 60, std::uint64_t seed = 0);

void to_json(nlohmann::json& j, const WorkloadSpec& spec);
void from_json(const nlohmann::json& j, WorkloadSpec& spec);

/// Fraction of peak held during each sixth of the period.
std::array<double, kPatternSegments> pattern_fractions(int pattern, std::uint64_t seed);

/// Dominant-resource demand at `t` seconds since (re)start.
std::int64_t workload(const WorkloadSpec& spec, std::int64_t t);
/// Demand of both resources at `t`.
LimitSet workload_demand(const WorkloadSpec& spec, std::int64_t t);

struct HostConfig {
    LimitSet total = make_limits(1000, 1000);
    /// Inert allocation that is never released; lowers usable capacity.
    LimitSet preoccupied = make_limits(0, 0);
    std::int64_t tick_s = 1;

    [[nodiscard]] LimitSet capacity() const;
    void validate() const;
};

enum class HostEventKind : std::uint8_t { oom_kill, stopped };

std::string_view to_string(HostEventKind kind);

struct HostEvent {
    std::int64_t t = 0;
    ContainerId id;
    HostEventKind kind = HostEventKind::oom_kill;
    std::int64_t mem_demand = 0;
    std::int64_t mem_limit = 0;
    /// True when the host ran out of memory rather than the container exceeding its own limit.
    bool host_pressure = false;
};

struct ContainerState {
    ContainerId id;
    WorkloadSpec spec;
    LimitSet limits;
    ContainerStatus status = ContainerStatus::running;
    std::int64_t started_at = 0;
    std::uint64_t order = 0;
    /// Deferred cpu work in mCPU-ticks.
    double backlog = 0.0;
    double total_demanded = 0.0;
    double total_granted = 0.0;
    int restart_count = 0;

    struct Window {
        std::int64_t ticks = 0;
        std::int64_t throttled = 0;
        double granted_sum = 0.0;
        std::int64_t mem_peak = 0;
    } window;
};

/// One resource-constrained device running containers, stepped one tick at a time.
class Host {
public:
    explicit Host(HostConfig config = {});

    [[nodiscard]] const HostConfig& config() const noexcept { return config_; }
    [[nodiscard]] std::int64_t now() const noexcept { return now_; }

    /// Starts a container at phase 0. Both limits must be present and non-zero.
    ContainerId run_container(const ContainerId& id, const WorkloadSpec& spec, const LimitSet& limits,
                              int restart_count = 0);
    ContainerId run_container(const WorkloadSpec& spec, const LimitSet& limits);

    /// Effective from the next tick. Throws NotFoundError if `id` is not running.
    void update_limits(const ContainerId& id, const LimitSet& limits);
    void stop(const ContainerId& id);

    /// Advances the clock by one tick.
    std::vector<HostEvent> tick();

    /// Closes the current sampling window. Containers that saw no ticks in it are omitted.
    MetricsSample sample_metrics();

    [[nodiscard]] const ContainerState& container(const ContainerId& id) const;
    [[nodiscard]] bool is_running(const ContainerId& id) const;
    [[nodiscard]] std::vector<ContainerId> running() const;
    /// Capacity minus the current limits of running containers.
    [[nodiscard]] PerResource<std::int64_t> allocatable() const;

private:
    ContainerState& find_running(const ContainerId& id);
    void kill(ContainerState& c, std::int64_t demand, bool host_pressure, std::vector<HostEvent>& events);

    HostConfig config_;
    std::int64_t now_ = 0;
    std::uint64_t next_order_ = 0;
    std::uint64_t next_auto_id_ = 0;
    std::map<ContainerId, ContainerState> containers_;
};

} // namespace orchestrion
