#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "orchestrion/device.hpp"
#include "orchestrion/knowledge.hpp"
#include "orchestrion/registry.hpp"
#include "orchestrion/scenario.hpp"

namespace orchestrion {

/// One container's sampling window as seen by its device's monitor.
struct TraceRow {
    std::int64_t t = 0;
    std::string device;
    std::string container;
    std::string deployment;
    double cpu_util = 0.0;
    std::int64_t cpu_limit = 0;
    double cpu_throttle = 0.0;
    double mem_util = 0.0;
    std::int64_t mem_limit = 0;
    std::string status;
    /// Deferred cpu work at the end of the window, in mCPU-seconds.
    double backlog = 0.0;
};

struct ExpectationResult {
    std::string name;
    std::string kind;
    bool passed = false;
    std::string detail;
};

void to_json(nlohmann::json& j, const ExpectationResult& r);

struct RunReport {
    std::string scenario;
    std::uint64_t seed = 0;
    std::int64_t duration_s = 0;
    std::vector<Event> events;
    std::vector<TraceRow> trace;
    std::vector<ExpectationResult> expectations;
    std::map<std::string, std::vector<TraceEntry>> bus_traces;
    std::map<std::string, nlohmann::json> deployments;
    double wall_seconds = 0.0;

    [[nodiscard]] bool passed() const;
    [[nodiscard]] std::string events_jsonl() const;
};

/// A set of devices sharing one registry and one event log, stepped together one tick at a time.
class Cluster {
public:
    explicit Cluster(const ScenarioConfig& config);
    Cluster(const Cluster&) = delete;
    Cluster& operator=(const Cluster&) = delete;

    [[nodiscard]] std::int64_t now() const;

    /// Advances every device by one tick: scrape, housekeeping, request injection, message delivery, host tick.
    void step();
    /// Delivers pending messages on every device until all buses are idle.
    void pump();

    DeploymentId submit(const DeviceId& device, const OwnerId& owner, const ImageName& image,
                        std::optional<DeploymentId> id = std::nullopt);

    /// Status from the device that owns the deployment, or from any device that saw it.
    [[nodiscard]] std::optional<nlohmann::json> status(const DeploymentId& id) const;
    /// True once every container of the deployment has gone two optimization cycles without a change.
    [[nodiscard]] bool deployment_stable(const DeploymentId& id) const;

    Device& device(const DeviceId& id);
    [[nodiscard]] std::vector<Device*> devices() const;
    EventLog& log() noexcept { return log_; }
    Registry& registry() noexcept { return registry_; }
    [[nodiscard]] const std::vector<TraceRow>& trace() const noexcept { return trace_; }
    [[nodiscard]] const ScenarioConfig& config() const noexcept { return config_; }

private:
    void inject_due_requests(std::int64_t t);
    void record_trace(Device& device, const MetricsSample& sample);

    ScenarioConfig config_;
    Registry registry_;
    EventLog log_;
    std::vector<std::unique_ptr<Device>> devices_;
    std::vector<TraceRow> trace_;
    std::set<DeploymentId> sent_;
};

/// Applies a seed override: the run seed changes and every derived workload seed follows it.
ScenarioConfig with_seed(ScenarioConfig config, std::uint64_t seed);

/// Runs the scenario for its full duration and checks its expectations.
RunReport run_scenario(const ScenarioConfig& config, std::optional<std::uint64_t> seed = std::nullopt);

/// Checks every expectation of `config` against a finished run.
std::vector<ExpectationResult> evaluate_expectations(const ScenarioConfig& config, const RunReport& report);

/// Dotted-path lookup into an event payload ("target.mem"). Returns nullptr when absent.
const nlohmann::json* lookup_path(const nlohmann::json& data, const std::string& path);
/// True when every key of `pattern` matches the event. A "t" key matches the event time; a value of the
/// form {"gt": x} or {"lt": x} is a numeric comparison, and any other object matches key by key.
bool event_matches(const Event& event, const nlohmann::json& pattern);

} // namespace orchestrion
