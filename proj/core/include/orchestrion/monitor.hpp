#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "orchestrion/bus.hpp"
#include "orchestrion/hostsim.hpp"
#include "orchestrion/knowledge.hpp"
#include "orchestrion/registry.hpp"

namespace orchestrion {

struct MonitorConfig {
    std::int64_t scrape_interval_s = 10;
    int max_attempts = 10;
    /// Local series older than this are moved to the registry.
    std::int64_t retention_s = 86400;
    /// How often retention is checked.
    std::int64_t archive_every_s = 3600;

    void validate() const;
};

void to_json(nlohmann::json& j, const MonitorConfig& c);
void from_json(const nlohmann::json& j, MonitorConfig& c);

/// Limits for retry attempt `attempt` (1-based): request, then base, then base memory plus
/// (attempt − 2) memory scale-up steps capped at `mem_max`. CPU stays at `last_target`'s value.
LimitSet retry_target(int attempt, const LimitSet& request, const LimitSet& base, const LimitSet& last_target,
                      const OptimizationPolicy& policy, ResourceAmount mem_max);

/// MonitoringResult payload for one scrape.
nlohmann::json monitoring_payload(const DeviceId& device, const MetricsSample& sample);

class Monitor {
public:
    Monitor(Bus& bus, Knowledge& knowledge, Host& host, Registry* registry, OptimizationPolicy policy,
            MonitorConfig config, EventLog* log);

    [[nodiscard]] bool scrape_due(std::int64_t t) const noexcept { return t % config_.scrape_interval_s == 0; }
    MetricsSample scrape_and_publish();

    /// Publishes one retry DeploymentRequest per OOM-killed container with attempts left.
    std::vector<Message> detect_premature_exit(const std::vector<HostEvent>& events);

    /// Moves points older than the retention window to the registry. Returns the archive hashes written.
    std::vector<ContentHash> enforce_retention(bool force = false);

    /// Publishes optimization requests for every container whose turn has come. Returns how many.
    std::size_t schedule_optimization();

    [[nodiscard]] const MonitorConfig& config() const noexcept { return config_; }

private:
    void log(const std::string& type, nlohmann::json data) const;

    Bus& bus_;
    Knowledge& knowledge_;
    Host& host_;
    Registry* registry_;
    OptimizationPolicy policy_;
    MonitorConfig config_;
    EventLog* log_;
    std::int64_t last_retention_check_ = 0;
    std::uint64_t next_cycle_ = 0;
};

} // namespace orchestrion
