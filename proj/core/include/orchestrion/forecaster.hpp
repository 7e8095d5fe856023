#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "orchestrion/bus.hpp"
#include "orchestrion/knowledge.hpp"
#include "orchestrion/metrics.hpp"

namespace orchestrion {

struct ForecastConfig {
    int p = 5;
    int d = 1;
    int q = 0;
    /// Future aggregated points to produce.
    int horizon = 30;
    /// Shorter histories fall back to repeating the last value.
    int min_points = 12;
    /// Aggregation bucket; hourly unless a scenario shrinks it.
    std::int64_t bucket_s = 3600;
    /// Most recent aggregated points used for fitting; 0 keeps all.
    int history = 0;

    void validate() const;
};

void to_json(nlohmann::json& j, const ForecastConfig& c);
void from_json(const nlohmann::json& j, ForecastConfig& c);

/// Mean per bucket of `bucket_s`, buckets counted from the first sample. A partial trailing bucket is kept.
/// Limits in each output point are those of the bucket's last sample. Throws ContractViolation when empty.
MetricsSeries aggregate_hourly(const MetricsSeries& series, std::int64_t bucket_s = 3600);

enum class Clip : std::uint8_t { none, non_negative, percentage };

struct Forecast {
    std::vector<double> values;
    /// History was too short; values repeat the last observation.
    bool fallback = false;
    /// Differences had zero variance; values follow the mean step.
    bool degenerate = false;
};

Forecast fit_and_forecast(std::span<const double> series, const ForecastConfig& config, Clip clip = Clip::none);

/// Fitted AR coefficients on the differenced series, exposed for testing. Empty when not estimable.
std::vector<double> fit_ar_coefficients(std::span<const double> series, int p);

struct ContainerForecast {
    std::string id;
    std::vector<double> cpu;
    std::vector<double> mem;
    std::vector<double> throttle;
    bool fallback = false;
    /// Maxima over the most recent optimization interval of observations.
    double observed_cpu_peak = 0.0;
    double observed_mem_peak = 0.0;
    double observed_throttle_peak = 0.0;
    std::optional<std::string> error;
};

void to_json(nlohmann::json& j, const ContainerForecast& f);
void from_json(const nlohmann::json& j, ContainerForecast& f);

ContainerForecast forecast_series(const MetricsSeries& series, const ForecastConfig& config,
                                  std::int64_t observed_window_s);

/// Answers ForecastRequest messages from the device's short-term series.
class Forecaster {
public:
    Forecaster(Bus& bus, const Knowledge& knowledge, ForecastConfig config, std::int64_t observed_window_s);

    [[nodiscard]] const std::shared_ptr<Subscription>& subscription() const noexcept { return sub_; }
    void handle(const Message& msg);
    [[nodiscard]] const ForecastConfig& config() const noexcept { return config_; }

private:
    Bus& bus_;
    const Knowledge& knowledge_;
    ForecastConfig config_;
    std::int64_t observed_window_s_;
    std::shared_ptr<Subscription> sub_;
};

} // namespace orchestrion
