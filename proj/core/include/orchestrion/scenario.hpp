#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "orchestrion/device.hpp"
#include "orchestrion/hostsim.hpp"
#include "orchestrion/model.hpp"

namespace orchestrion {

struct ImageSpec {
    OwnerId owner;
    ImageName name;
    WorkloadSpec workload;
    LimitSet request;
    LimitSet base;
    /// Whether the workload seed was given explicitly (otherwise derived from the run seed).
    bool explicit_seed = false;
};

struct DeviceSpec {
    DeviceId id;
    HostConfig host;
};

/// An external deployment request, sent at a fixed time or once other deployments have settled.
struct RequestSpec {
    DeploymentId id;
    OwnerId owner;
    ImageName image;
    DeviceId device;
    std::optional<std::int64_t> at;
    /// Deployments whose containers must all be stable before this request is sent.
    std::vector<DeploymentId> after_stable;
};

struct Expectation {
    std::string name;
    /// sequence | count | limit_range_after | throttle_below_after | final_state
    std::string kind;
    nlohmann::json args = nlohmann::json::object();
};

struct ScenarioConfig {
    std::string name;
    std::string description;
    std::vector<DeviceSpec> devices;
    std::vector<ImageSpec> images;
    std::vector<RequestSpec> requests;
    DeviceOptions options;
    std::int64_t duration_s = 1800;
    std::uint64_t seed = 42;
    std::vector<Expectation> expectations;

    /// Throws ConfigError with the first problem found.
    void validate() const;
};

void to_json(nlohmann::json& j, const ScenarioConfig& s);
/// Throws ConfigError with a path-like hint on malformed input.
ScenarioConfig parse_scenario(const nlohmann::json& doc);
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Workload seed for image `index` under run seed `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::size_t index) noexcept;

/// The reference experiments, runnable by name.
std::vector<ScenarioConfig> builtin_scenarios();
std::vector<std::string> builtin_names();
/// Throws NotFoundError for unknown names.
ScenarioConfig builtin_scenario(const std::string& name);

} // namespace orchestrion
