#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "orchestrion/bus.hpp"
#include "orchestrion/forecaster.hpp"
#include "orchestrion/hostsim.hpp"
#include "orchestrion/knowledge.hpp"
#include "orchestrion/model.hpp"

namespace orchestrion {

/// What the analyzer knows about one running container when predicting availability.
struct ContainerOutlook {
    std::string id;
    LimitSet current;
    std::optional<ContainerForecast> forecast;
    /// Used instead of a forecast when none is available.
    PerResource<double> last_util{0.0, 0.0};
};

struct ContainerPrediction {
    std::string id;
    LimitSet current;
    /// Predicted utilization clamped from below by the current limit.
    std::vector<double> cpu;
    std::vector<double> mem;
    std::vector<double> throttle;
    /// max over the horizon of the clamped series (or of the fallback contribution).
    PerResource<double> contribution{0.0, 0.0};
    bool forecast_missing = false;
};

struct PredictionSet {
    std::vector<ContainerPrediction> containers;
    /// P^avail per resource. May be negative.
    PerResource<double> avail{0.0, 0.0};
};

/// capacity − Σ_c max_t max(L^current, P^util[t]) − reserve − Σ pending reservations.
PredictionSet predict_availability(std::span<const ContainerOutlook> containers, const LimitSet& capacity,
                                   const PerResource<ResourceAmount>& reserve,
                                   std::span<const LimitSet> reservations = {});

struct AdmissionVerdict {
    bool accept = false;
    LimitSet target;
    PerResource<double> avail{0.0, 0.0};
    std::string reason;
};

/// Accepts only when every resource of `target` lies strictly below the predicted availability.
AdmissionVerdict admit(const LimitSet& target, const PredictionSet& pred);

/// Rounds to 1e-6 so that float noise in forecasts does not flip comparisons.
double snap(double value) noexcept;

ResourceAmount optimize_memory(ResourceAmount current, std::span<const double> predicted, double observed_peak,
                               const OptimizationPolicy& policy, ResourceAmount mem_max);

ResourceAmount optimize_cpu(ResourceAmount current, std::span<const double> predicted,
                            std::span<const double> predicted_throttle, const OptimizationPolicy& policy,
                            ResourceAmount cpu_max);

/// P^avail −= delta for every resource present in `delta`.
PredictionSet account_optimization(PredictionSet pred, const LimitDelta& delta);

/// Subscribes to analyze and forecast. Admissions and optimization cycles run one at a time in arrival order.
class Analyzer {
public:
    Analyzer(Bus& bus, Knowledge& knowledge, const Host& host, OptimizationPolicy policy, int horizon,
             EventLog* log);

    [[nodiscard]] const std::shared_ptr<Subscription>& analyze_subscription() const noexcept { return analyze_; }
    [[nodiscard]] const std::shared_ptr<Subscription>& forecast_subscription() const noexcept { return forecast_; }

    void handle(const Message& msg);
    [[nodiscard]] bool busy() const noexcept { return in_flight_.has_value() || !queue_.empty(); }

private:
    struct Job {
        enum class Kind : std::uint8_t { admission, optimization } kind;
        Message request;
        std::string cycle;
        std::vector<std::string> containers;
    };

    void try_start();
    void finish(const Message& response);
    PredictionSet predict(const std::vector<ContainerForecast>& forecasts) const;
    void run_admission(const Job& job, const PredictionSet& pred);
    void run_optimization(const Job& job, PredictionSet pred, const std::vector<ContainerForecast>& forecasts);
    void log(const std::string& type, nlohmann::json data) const;

    Bus& bus_;
    Knowledge& knowledge_;
    const Host& host_;
    OptimizationPolicy policy_;
    int horizon_;
    EventLog* log_;
    std::shared_ptr<Subscription> analyze_;
    std::shared_ptr<Subscription> forecast_;
    std::deque<Job> queue_;
    std::optional<std::pair<std::string, Job>> in_flight_;
    std::map<std::string, std::vector<std::string>> batches_;
    std::uint64_t next_job_ = 0;
};

} // namespace orchestrion
