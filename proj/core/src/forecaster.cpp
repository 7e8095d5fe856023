#include "orchestrion/forecaster.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace orchestrion {

void ForecastConfig::validate() const
{
    if (p < 1 || d != 1 || q != 0) {
        throw ConfigError("forecast: only ARIMA(p,1,0) with p >= 1 is supported");
    }
    if (horizon < 1) {
        throw ConfigError("forecast: horizon must be >= 1");
    }
    if (min_points < p + d + 1) {
        throw ConfigError("forecast: min_points must be >= p + d + 1");
    }
    if (bucket_s <= 0) {
        throw ConfigError("forecast: bucket_s must be > 0");
    }
    if (history != 0 && history < min_points) {
        throw ConfigError("forecast: history must be 0 or >= min_points");
    }
}

void to_json(nlohmann::json& j, const ForecastConfig& c)
{
    j = nlohmann::json{{"p", c.p},           {"d", c.d},
                       {"q", c.q},           {"horizon", c.horizon},
                       {"min_points", c.min_points}, {"bucket_s", c.bucket_s},
                       {"history", c.history}};
}

void from_json(const nlohmann::json& j, ForecastConfig& c)
{
    c.p = j.value("p", c.p);
    c.d = j.value("d", c.d);
    c.q = j.value("q", c.q);
    c.horizon = j.value("horizon", c.horizon);
    c.min_points = j.value("min_points", c.min_points);
    c.bucket_s = j.value("bucket_s", c.bucket_s);
    c.history = j.value("history", c.history);
    c.validate();
}

MetricsSeries aggregate_hourly(const MetricsSeries& series, std::int64_t bucket_s)
{
    if (series.points.empty()) {
        throw ContractViolation("aggregate_hourly: series is empty");
    }
    if (bucket_s <= 0) {
        throw ContractViolation("aggregate_hourly: bucket must be positive");
    }
    MetricsSeries out;
    out.key = series.key;
    out.retention_s = series.retention_s;

    const std::int64_t t0 = series.points.front().t;
    std::int64_t current = -1;
    SeriesPoint acc;
    std::int64_t n = 0;
    auto flush = [&] {
        if (n > 0) {
            const auto dn = static_cast<double>(n);
            acc.cpu_util /= dn;
            acc.mem_util /= dn;
            acc.throttle_pct /= dn;
            out.points.push_back(acc);
        }
    };
    for (const auto& pt : series.points) {
        const std::int64_t bucket = (pt.t - t0) / bucket_s;
        if (bucket != current) {
            flush();
            current = bucket;
            acc = SeriesPoint{t0 + bucket * bucket_s, 0.0, 0.0, 0.0, 0, 0};
            n = 0;
        }
        acc.cpu_util += pt.cpu_util;
        acc.mem_util += pt.mem_util;
        acc.throttle_pct += pt.throttle_pct;
        acc.cpu_limit = pt.cpu_limit;
        acc.mem_limit = pt.mem_limit;
        ++n;
    }
    flush();
    return out;
}

std::vector<double> fit_ar_coefficients(std::span<const double> series, int p)
{
    if (series.size() < 2) {
        return {};
    }
    std::vector<double> z(series.size() - 1);
    for (std::size_t i = 1; i < series.size(); ++i) {
        z[i - 1] = series[i] - series[i - 1];
    }
    const auto lags = static_cast<std::size_t>(p);
    if (z.size() <= lags) {
        return {};
    }
    const auto rows = static_cast<Eigen::Index>(z.size() - lags);
    Eigen::MatrixXd x(rows, p);
    Eigen::VectorXd y(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto i = static_cast<std::size_t>(r) + lags;
        y(r) = z[i];
        for (std::size_t j = 0; j < lags; ++j) {
            x(r, static_cast<Eigen::Index>(j)) = z[i - 1 - j];
        }
    }
    // Minimum-norm least squares; rank deficiency is normal for periodic inputs.
    const Eigen::VectorXd phi = x.completeOrthogonalDecomposition().solve(y);
    return std::vector<double>(phi.data(), phi.data() + phi.size());
}

namespace {

double apply_clip(double v, Clip clip)
{
    switch (clip) {
    case Clip::none:
        return v;
    case Clip::non_negative:
        return std::max(0.0, v);
    case Clip::percentage:
        return std::clamp(v, 0.0, 100.0);
    }
    return v;
}

} // namespace

Forecast fit_and_forecast(std::span<const double> series, const ForecastConfig& config, Clip clip)
{
    const auto horizon = static_cast<std::size_t>(config.horizon);
    Forecast out;
    out.values.reserve(horizon);
    if (series.empty()) {
        throw ContractViolation("fit_and_forecast: series is empty");
    }
    const double last = series.back();

    auto repeat_last = [&] {
        out.values.assign(horizon, apply_clip(last, clip));
        out.fallback = true;
        return out;
    };
    if (series.size() < static_cast<std::size_t>(config.min_points)) {
        return repeat_last();
    }

    std::vector<double> z(series.size() - 1);
    for (std::size_t i = 1; i < series.size(); ++i) {
        z[i - 1] = series[i] - series[i - 1];
    }
    double mean = 0.0;
    double scale = 0.0;
    for (double v : z) {
        mean += v;
        scale = std::max(scale, std::abs(v));
    }
    mean /= static_cast<double>(z.size());
    double spread = 0.0;
    for (double v : z) {
        spread = std::max(spread, std::abs(v - mean));
    }
    if (spread <= 1e-12 * std::max(1.0, scale)) {
        out.degenerate = true;
        for (std::size_t h = 1; h <= horizon; ++h) {
            out.values.push_back(apply_clip(last + mean * static_cast<double>(h), clip));
        }
        return out;
    }

    const std::vector<double> phi = fit_ar_coefficients(series, config.p);
    if (phi.empty()) {
        return repeat_last();
    }
    std::vector<double> diffs = z;
    double level = last;
    for (std::size_t h = 0; h < horizon; ++h) {
        double next = 0.0;
        for (std::size_t j = 0; j < phi.size(); ++j) {
            next += phi[j] * diffs[diffs.size() - 1 - j];
        }
        diffs.push_back(next);
        level += next;
        if (!std::isfinite(level)) {
            out.values.clear();
            return repeat_last();
        }
        out.values.push_back(apply_clip(level, clip));
    }
    return out;
}

void to_json(nlohmann::json& j, const ContainerForecast& f)
{
    j = nlohmann::json{
        {"id", f.id},
        {"cpu", f.cpu},
        {"mem", f.mem},
        {"throttle", f.throttle},
        {"fallback", f.fallback},
        {"observed_cpu_peak", f.observed_cpu_peak},
        {"observed_mem_peak", f.observed_mem_peak},
        {"observed_throttle_peak", f.observed_throttle_peak},
    };
    if (f.error) {
        j["error"] = *f.error;
    }
}

void from_json(const nlohmann::json& j, ContainerForecast& f)
{
    f.id = j.at("id").get<std::string>();
    f.cpu = j.value("cpu", std::vector<double>{});
    f.mem = j.value("mem", std::vector<double>{});
    f.throttle = j.value("throttle", std::vector<double>{});
    f.fallback = j.value("fallback", false);
    f.observed_cpu_peak = j.value("observed_cpu_peak", 0.0);
    f.observed_mem_peak = j.value("observed_mem_peak", 0.0);
    f.observed_throttle_peak = j.value("observed_throttle_peak", 0.0);
    if (j.contains("error")) {
        f.error = j.at("error").get<std::string>();
    }
}

ContainerForecast forecast_series(const MetricsSeries& series, const ForecastConfig& config,
                                  std::int64_t observed_window_s)
{
    ContainerForecast out;
    out.id = series.key;
    if (series.points.empty()) {
        out.error = "no metrics recorded";
        return out;
    }
    const MetricsSeries agg = aggregate_hourly(series, config.bucket_s);
    std::size_t first = 0;
    if (config.history > 0 && agg.points.size() > static_cast<std::size_t>(config.history)) {
        first = agg.points.size() - static_cast<std::size_t>(config.history);
    }
    std::vector<double> cpu;
    std::vector<double> mem;
    std::vector<double> thr;
    for (std::size_t i = first; i < agg.points.size(); ++i) {
        cpu.push_back(agg.points[i].cpu_util);
        mem.push_back(agg.points[i].mem_util);
        thr.push_back(agg.points[i].throttle_pct);
    }
    auto fc = fit_and_forecast(cpu, config, Clip::non_negative);
    auto fm = fit_and_forecast(mem, config, Clip::non_negative);
    auto ft = fit_and_forecast(thr, config, Clip::percentage);
    out.cpu = std::move(fc.values);
    out.mem = std::move(fm.values);
    out.throttle = std::move(ft.values);
    out.fallback = fc.fallback;

    const std::int64_t since = series.points.back().t - observed_window_s;
    for (const auto& pt : series.points) {
        if (pt.t > since) {
            out.observed_cpu_peak = std::max(out.observed_cpu_peak, pt.cpu_util);
            out.observed_mem_peak = std::max(out.observed_mem_peak, pt.mem_util);
            out.observed_throttle_peak = std::max(out.observed_throttle_peak, pt.throttle_pct);
        }
    }
    return out;
}

Forecaster::Forecaster(Bus& bus, const Knowledge& knowledge, ForecastConfig config, std::int64_t observed_window_s)
    : bus_(bus), knowledge_(knowledge), config_(config), observed_window_s_(observed_window_s),
      sub_(bus.subscribe(Topic::forecast))
{
    config_.validate();
}

void Forecaster::handle(const Message& msg)
{
    if (msg.action != Action::forecast_request) {
        return;
    }
    ForecastConfig cfg = config_;
    if (msg.payload.contains("horizon")) {
        cfg.horizon = std::max(1, msg.payload.at("horizon").get<int>());
    }
    nlohmann::json results = nlohmann::json::array();
    for (const auto& key : msg.payload.value("containers", nlohmann::json::array())) {
        const auto id = key.get<std::string>();
        const MetricsSeries* series = knowledge_.series(id);
        if (series == nullptr) {
            ContainerForecast missing;
            missing.id = id;
            missing.error = "unknown container";
            results.push_back(missing);
            continue;
        }
        results.push_back(forecast_series(*series, cfg, observed_window_s_));
    }
    Message reply;
    reply.action = Action::forecast_response;
    reply.correlation_id = msg.correlation_id;
    reply.payload = nlohmann::json{{"results", std::move(results)}, {"horizon", cfg.horizon}};
    bus_.publish(Topic::forecast, std::move(reply));
}

} // namespace orchestrion
