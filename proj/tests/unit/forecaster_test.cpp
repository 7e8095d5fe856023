#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "orchestrion/forecaster.hpp"
#include "orchestrion/knowledge.hpp"

using namespace orchestrion;

namespace {

MetricsSeries series_of(const std::vector<double>& values, std::int64_t step, std::string key = "c")
{
    MetricsSeries s;
    s.key = std::move(key);
    for (std::size_t i = 0; i < values.size(); ++i) {
        SeriesPoint p;
        p.t = static_cast<std::int64_t>(i) * step;
        p.cpu_util = values[i];
        p.mem_util = values[i] / 2;
        p.throttle_pct = std::min(100.0, values[i]);
        s.append(p);
    }
    return s;
}

} // namespace

TEST(Aggregate, MeansPerBucketWithPartialTail)
{
    const auto agg = aggregate_hourly(series_of({1, 2, 3, 4, 5}, 10), 20);
    ASSERT_EQ(agg.points.size(), 3U);
    EXPECT_DOUBLE_EQ(agg.points[0].cpu_util, 1.5);
    EXPECT_DOUBLE_EQ(agg.points[1].cpu_util, 3.5);
    EXPECT_DOUBLE_EQ(agg.points[2].cpu_util, 5.0);
    EXPECT_EQ(agg.points[1].t, 20);
    EXPECT_THROW(aggregate_hourly(MetricsSeries{}), ContractViolation);
}

TEST(Forecast, ConstantSeriesForecastsItself)
{
    ForecastConfig cfg;
    cfg.horizon = 3;
    cfg.min_points = 7;
    const auto f = fit_and_forecast(std::vector<double>(10, 80.0), cfg);
    EXPECT_EQ(f.values, (std::vector<double>{80, 80, 80}));
    EXPECT_TRUE(f.degenerate);
}

TEST(Forecast, RampUsesMeanStep)
{
    ForecastConfig cfg;
    cfg.horizon = 2;
    cfg.min_points = 7;
    const std::vector<double> ramp{10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
    const auto f = fit_and_forecast(ramp, cfg);
    ASSERT_EQ(f.values.size(), 2U);
    EXPECT_NEAR(f.values[0], 110, 1e-9);
    EXPECT_NEAR(f.values[1], 120, 1e-9);
}

TEST(Forecast, ShortHistoryFallsBack)
{
    ForecastConfig cfg;
    cfg.horizon = 5;
    cfg.min_points = 7;
    const auto f = fit_and_forecast(std::vector<double>{3, 1, 4, 1}, cfg);
    EXPECT_TRUE(f.fallback);
    EXPECT_EQ(f.values, std::vector<double>(5, 1.0));
}

TEST(Forecast, PeriodicSeriesIsContinuedExactly)
{
    ForecastConfig cfg;
    cfg.horizon = 12;
    std::vector<double> s;
    const double shape[] = {20, 45, 70, 100, 70, 45};
    for (int i = 0; i < 18; ++i) {
        s.push_back(shape[i % 6]);
    }
    const auto f = fit_and_forecast(s, cfg);
    for (int h = 0; h < 12; ++h) {
        EXPECT_NEAR(f.values[static_cast<std::size_t>(h)], shape[(18 + h) % 6], 1e-6) << h;
    }
}

TEST(Forecast, CoefficientsMatchNormalEquationOracle)
{
    const std::vector<double> s{12, 15, 11, 19, 25, 21, 18, 30, 27, 22, 35, 29, 31, 40, 33, 38, 45, 41};
    const auto got = fit_ar_coefficients(s, 5);
    const auto want = oracle::ar_fit(s, 5);
    ASSERT_EQ(got.size(), 5U);
    ASSERT_EQ(want.size(), 5U);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_NEAR(got[i], want[i], 1e-8) << i;
    }
    ForecastConfig cfg;
    cfg.horizon = 6;
    const auto f = fit_and_forecast(s, cfg);
    const auto o = oracle::arima_forecast(s, 5, 6);
    for (std::size_t h = 0; h < 6; ++h) {
        EXPECT_NEAR(f.values[h], o[h], 1e-7) << h;
    }
}

TEST(Forecast, OracleSolverHandlesKnownSystem)
{
    // 2x + y = 5, x + 3y = 10  ->  x = 1, y = 3
    const auto x = oracle::gauss_solve({2, 1, 1, 3}, {5, 10}, 2);
    ASSERT_EQ(x.size(), 2U);
    EXPECT_NEAR(x[0], 1.0, 1e-12);
    EXPECT_NEAR(x[1], 3.0, 1e-12);
    EXPECT_TRUE(oracle::gauss_solve({1, 2, 2, 4}, {1, 2}, 2).empty());
}

TEST(Forecast, ClipsPercentagesAndNegatives)
{
    ForecastConfig cfg;
    cfg.horizon = 5;
    cfg.min_points = 7;
    const std::vector<double> down{60, 50, 40, 30, 20, 10, 0};
    for (double v : fit_and_forecast(down, cfg, Clip::non_negative).values) {
        EXPECT_GE(v, 0.0);
    }
    const std::vector<double> up{50, 60, 70, 80, 90, 100, 110};
    for (double v : fit_and_forecast(up, cfg, Clip::percentage).values) {
        EXPECT_LE(v, 100.0);
    }
}

TEST(Forecast, ConfigValidation)
{
    ForecastConfig cfg;
    cfg.min_points = 5;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = ForecastConfig{};
    cfg.horizon = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(ForecastSeries, ReportsObservedPeaksInWindow)
{
    ForecastConfig cfg;
    cfg.bucket_s = 10;
    cfg.min_points = 7;
    cfg.horizon = 4;
    const auto f = forecast_series(series_of({10, 90, 20, 30, 40, 30, 20, 30, 40, 30}, 10), cfg, 50);
    EXPECT_EQ(f.cpu.size(), 4U);
    EXPECT_DOUBLE_EQ(f.observed_cpu_peak, 40.0);
    EXPECT_FALSE(f.error.has_value());
}

TEST(ForecasterService, RepliesWithCorrelationAndOneEntryPerContainer)
{
    Bus bus(DeviceId{"10.0.0.1"});
    Knowledge knowledge;
    ForecastConfig cfg;
    cfg.bucket_s = 10;
    Forecaster forecaster(bus, knowledge, cfg, 300);
    for (int i = 1; i <= 3; ++i) {
        MetricsSample s;
        s.timestamp = i * 10;
        ContainerSample c;
        c.id = ContainerId{"c1"};
        c.cpu_util = 5.0 * i;
        c.limits = make_limits(100, 64);
        s.containers.push_back(c);
        s.avail = PerResource<double>{0.0, 0.0};
        s.total = PerResource<double>{0.0, 0.0};
        s.allocatable = PerResource<std::int64_t>{0, 0};
        knowledge.record(s);
    }
    Message req;
    req.action = Action::forecast_request;
    req.correlation_id = "job-7";
    req.payload = nlohmann::json{{"containers", {"c1", "ghost"}}, {"horizon", 3}};
    bus.publish(Topic::forecast, req);
    auto in = bus.poll();
    ASSERT_TRUE(in);
    forecaster.handle(in->msg);
    auto out = bus.poll();
    ASSERT_TRUE(out);
    EXPECT_EQ(out->msg.action, Action::forecast_response);
    EXPECT_EQ(out->msg.correlation_id, "job-7");
    const auto& results = out->msg.payload.at("results");
    ASSERT_EQ(results.size(), 2U);
    EXPECT_EQ(results[0].at("cpu").size(), 3U);
    EXPECT_TRUE(results[1].contains("error"));
}
