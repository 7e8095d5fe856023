#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "orchestrion/analyzer.hpp"
#include "orchestrion/forecaster.hpp"
#include "orchestrion/monitor.hpp"
#include "orchestrion/registry.hpp"

namespace oracle {

namespace o = orchestrion;

std::vector<double> gauss_solve(std::vector<double> a, std::vector<double> b, std::size_t n)
{
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r * n + col]) > std::abs(a[pivot * n + col])) {
                pivot = r;
            }
        }
        if (std::abs(a[pivot * n + col]) < 1e-12) {
            return {};
        }
        if (pivot != col) {
            for (std::size_t k = 0; k < n; ++k) {
                std::swap(a[col * n + k], a[pivot * n + k]);
            }
            std::swap(b[col], b[pivot]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r * n + col] / a[col * n + col];
            for (std::size_t k = col; k < n; ++k) {
                a[r * n + k] -= f * a[col * n + k];
            }
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t k = i + 1; k < n; ++k) {
            s -= a[i * n + k] * x[k];
        }
        x[i] = s / a[i * n + i];
    }
    return x;
}

std::vector<double> ar_fit(const std::vector<double>& series, int p)
{
    std::vector<double> z;
    for (std::size_t i = 1; i < series.size(); ++i) {
        z.push_back(series[i] - series[i - 1]);
    }
    const auto lags = static_cast<std::size_t>(p);
    if (z.size() <= lags) {
        return {};
    }
    std::vector<double> xtx(lags * lags, 0.0);
    std::vector<double> xty(lags, 0.0);
    for (std::size_t t = lags; t < z.size(); ++t) {
        for (std::size_t i = 0; i < lags; ++i) {
            xty[i] += z[t - 1 - i] * z[t];
            for (std::size_t j = 0; j < lags; ++j) {
                xtx[i * lags + j] += z[t - 1 - i] * z[t - 1 - j];
            }
        }
    }
    return gauss_solve(xtx, xty, lags);
}

std::vector<double> arima_forecast(const std::vector<double>& series, int p, int horizon)
{
    const auto phi = ar_fit(series, p);
    if (phi.empty()) {
        return {};
    }
    std::vector<double> z;
    for (std::size_t i = 1; i < series.size(); ++i) {
        z.push_back(series[i] - series[i - 1]);
    }
    std::vector<double> out;
    double level = series.back();
    for (int h = 0; h < horizon; ++h) {
        double next = 0.0;
        for (std::size_t j = 0; j < phi.size(); ++j) {
            next += phi[j] * z[z.size() - 1 - j];
        }
        z.push_back(next);
        level += next;
        out.push_back(level);
    }
    return out;
}

namespace {

std::string str(double v)
{
    std::ostringstream os;
    os << v;
    return os.str();
}

CheckOutcome expect_eq(std::string name, double got, double want, double tol = 1e-9)
{
    const bool ok = std::abs(got - want) <= tol;
    return CheckOutcome{std::move(name), ok, "got " + str(got) + ", want " + str(want)};
}

CheckOutcome expect_true(std::string name, bool cond, std::string detail)
{
    return CheckOutcome{std::move(name), cond, std::move(detail)};
}

o::ContainerOutlook outlook(const std::string& id, std::int64_t cpu, std::int64_t mem, std::vector<double> cpu_f,
                            std::vector<double> mem_f)
{
    o::ContainerOutlook c;
    c.id = id;
    c.current = o::make_limits(cpu, mem);
    o::ContainerForecast f;
    f.id = id;
    f.cpu = std::move(cpu_f);
    f.mem = std::move(mem_f);
    f.throttle.assign(f.cpu.size(), 0.0);
    c.forecast = f;
    return c;
}

o::MetricsSeries samples(const std::vector<double>& values, std::int64_t step)
{
    o::MetricsSeries s;
    s.key = "c";
    for (std::size_t i = 0; i < values.size(); ++i) {
        o::SeriesPoint p;
        p.t = static_cast<std::int64_t>(i) * step;
        p.cpu_util = values[i];
        p.mem_util = values[i];
        s.append(p);
    }
    return s;
}

} // namespace

std::vector<CheckOutcome> formula_examples()
{
    std::vector<CheckOutcome> out;
    const o::OptimizationPolicy policy;
    const o::ResourceAmount cpu_max{1000};
    const o::ResourceAmount mem_max{500};
    const std::vector<double> none{0.0};

    // Availability.
    {
        const auto pred = o::predict_availability({}, o::make_limits(1000, 400), policy.reserve);
        out.push_back(expect_eq("availability with no containers", pred.avail[o::ResourceKind::mem], 400));
    }
    {
        std::vector<o::ContainerOutlook> cs{outlook("a", 50, 150, {10, 10}, {90, 95}),
                                            outlook("b", 50, 150, {10, 10}, {95, 80})};
        const auto pred = o::predict_availability(cs, o::make_limits(1000, 400), policy.reserve);
        out.push_back(expect_eq("availability 400 - 150 - 150", pred.avail[o::ResourceKind::mem], 100));
    }
    {
        std::vector<o::ContainerOutlook> cs{outlook("a", 100, 64, {120, 160, 140}, {10, 10, 10})};
        const auto pred = o::predict_availability(cs, o::make_limits(1000, 1000), policy.reserve);
        out.push_back(expect_eq("clamped contribution keeps the larger prediction",
                                pred.containers.front().contribution[o::ResourceKind::cpu], 160));
        out.push_back(expect_true("clamped series never below the limit",
                                  std::all_of(pred.containers.front().cpu.begin(), pred.containers.front().cpu.end(),
                                              [](double v) { return v >= 100.0; }),
                                  "every point >= 100"));
    }
    {
        o::PerResource<o::ResourceAmount> reserve{o::ResourceAmount{100}, o::ResourceAmount{50}};
        const std::vector<o::LimitSet> reservations{o::make_limits(200, 150)};
        const auto pred = o::predict_availability({}, o::make_limits(1000, 1000), reserve, reservations);
        out.push_back(expect_eq("reserve and pending reservations reduce cpu availability",
                                pred.avail[o::ResourceKind::cpu], 700));
        out.push_back(expect_eq("reserve and pending reservations reduce mem availability",
                                pred.avail[o::ResourceKind::mem], 800));
    }
    {
        std::vector<o::ContainerOutlook> cs{outlook("a", 50, 600, {10}, {700})};
        const auto pred = o::predict_availability(cs, o::make_limits(1000, 400), policy.reserve);
        out.push_back(expect_eq("availability may go negative", pred.avail[o::ResourceKind::mem], -300));
    }

    // Admission.
    auto pred_with = [](double cpu, double mem) {
        o::PredictionSet p;
        p.avail = o::PerResource<double>{cpu, mem};
        return p;
    };
    out.push_back(expect_true("mem 150 against 250 is accepted",
                              o::admit(o::LimitSet::only(o::ResourceKind::mem, o::ResourceAmount{150}), pred_with(1000, 250)).accept,
                              "accept"));
    out.push_back(expect_true("mem 100 against exactly 100 is rejected",
                              !o::admit(o::LimitSet::only(o::ResourceKind::mem, o::ResourceAmount{100}), pred_with(1000, 100)).accept,
                              "reject"));
    out.push_back(expect_true("cpu 50 against 95 is accepted",
                              o::admit(o::LimitSet::only(o::ResourceKind::cpu, o::ResourceAmount{50}), pred_with(95, 1000)).accept,
                              "accept"));
    out.push_back(expect_true("cpu 50 against exactly 50 is rejected",
                              !o::admit(o::make_limits(50, 32), pred_with(50, 1000)).accept, "reject"));
    out.push_back(expect_true("any short resource rejects",
                              !o::admit(o::make_limits(10, 300), pred_with(900, 200)).accept, "reject"));

    // Memory optimization.
    {
        const std::vector<double> f{80, 95, 90};
        out.push_back(expect_eq("mem downscale 150 -> 130 above 95*1.1",
                                static_cast<double>(o::optimize_memory(o::ResourceAmount{150}, f, 95, policy, mem_max).value()),
                                130));
        const std::vector<double> g{98, 90};
        out.push_back(expect_eq("mem upscale 100 -> 120 when 98*1.1 > 100",
                                static_cast<double>(o::optimize_memory(o::ResourceAmount{100}, g, 90, policy, mem_max).value()),
                                120));
        o::OptimizationPolicy coarse = policy;
        coarse.scale_down.set(o::ResourceKind::mem, o::ResourceAmount{50});
        out.push_back(expect_eq("mem downscale refused below the 104.5 margin floor",
                                static_cast<double>(o::optimize_memory(o::ResourceAmount{150}, f, 95, coarse, mem_max).value()),
                                150));
        out.push_back(expect_eq("mem upscale clamped to the maximum",
                                static_cast<double>(o::optimize_memory(o::ResourceAmount{490}, std::vector<double>{480}, 0,
                                                                       policy, mem_max)
                                                        .value()),
                                500));
        out.push_back(expect_eq("mem without forecast is unchanged",
                                static_cast<double>(o::optimize_memory(o::ResourceAmount{150}, {}, 95, policy, mem_max).value()),
                                150));
    }

    // Cpu optimization.
    {
        const std::vector<double> up{100, 120};
        out.push_back(expect_eq("cpu branch a: 100 -> 150",
                                static_cast<double>(o::optimize_cpu(o::ResourceAmount{100}, up, none, policy, cpu_max).value()),
                                150));
        const std::vector<double> p90{90};
        const std::vector<double> thr40{40};
        out.push_back(expect_eq("cpu branch b adjusted scale 50*40/100 = 20",
                                static_cast<double>(o::optimize_cpu(o::ResourceAmount{100}, p90, thr40, policy, cpu_max).value()),
                                120));
        const std::vector<double> p100{100};
        out.push_back(expect_eq("cpu branch c buffer 100*1.1 = 110",
                                static_cast<double>(o::optimize_cpu(o::ResourceAmount{200}, p100, none, policy, cpu_max).value()),
                                110));
        const std::vector<double> p95{95};
        out.push_back(expect_eq("cpu branch c keeps the limit when the buffer exceeds it",
                                static_cast<double>(o::optimize_cpu(o::ResourceAmount{100}, p95, none, policy, cpu_max).value()),
                                100));
        const std::vector<double> big{990};
        out.push_back(expect_eq("cpu upscale clamped to host total",
                                static_cast<double>(o::optimize_cpu(o::ResourceAmount{980}, big, none, policy, cpu_max).value()),
                                1000));
        const std::vector<double> p300{30};
        out.push_back(expect_eq("cpu large downscale limited to one scale step",
                                static_cast<double>(o::optimize_cpu(o::ResourceAmount{300}, p300, none, policy, cpu_max).value()),
                                200));
    }

    // Accounting.
    {
        auto pred = pred_with(300, 400);
        pred = o::account_optimization(pred, o::LimitDelta{50, 0});
        out.push_back(expect_eq("upscale +50 reduces availability to 250", pred.avail[o::ResourceKind::cpu], 250));
        pred = o::account_optimization(pred, o::LimitDelta{0, -40});
        out.push_back(expect_eq("downscale -40 returns 40", pred.avail[o::ResourceKind::mem], 440));
        pred = o::account_optimization(pred, o::LimitDelta{0, 0});
        out.push_back(expect_eq("zero delta leaves availability", pred.avail[o::ResourceKind::cpu], 250));
    }

    // Retry escalation: base + (k - 2) * scale_up.
    {
        const auto request = o::make_limits(50, 15);
        const auto base = o::make_limits(25, 10);
        bool ok = o::retry_target(1, request, base, request, policy, mem_max) == request;
        std::string detail;
        for (int k = 2; k <= 8; ++k) {
            const auto t = o::retry_target(k, request, base, base, policy, mem_max);
            const std::int64_t want = 10 + (k - 2) * 20;
            ok = ok && t[o::ResourceKind::mem].value() == want && t[o::ResourceKind::cpu].value() == 25;
            detail += std::to_string(t[o::ResourceKind::mem].value()) + " ";
        }
        out.push_back(expect_true("retry ladder 10, 30, 50, ...", ok, detail));
    }

    // Forecasting.
    {
        o::ForecastConfig cfg;
        cfg.horizon = 3;
        cfg.min_points = 7;
        const std::vector<double> flat(12, 80.0);
        const auto f = o::fit_and_forecast(flat, cfg);
        out.push_back(expect_true("constant series forecasts itself",
                                  f.values == std::vector<double>{80, 80, 80}, "80 80 80"));
        cfg.horizon = 2;
        const std::vector<double> ramp{10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
        const auto r = o::fit_and_forecast(ramp, cfg);
        out.push_back(expect_true("ramp forecasts 110, 120",
                                  r.values.size() == 2 && std::abs(r.values[0] - 110) < 1e-9 &&
                                      std::abs(r.values[1] - 120) < 1e-9,
                                  "degenerate fit"));
        const std::vector<double> short_series{1, 2, 3, 4};
        const auto s = o::fit_and_forecast(short_series, cfg);
        out.push_back(expect_true("short history falls back to the last value",
                                  s.fallback && s.values == std::vector<double>{4, 4}, "fallback"));
    }
    {
        const auto one = o::aggregate_hourly(samples(std::vector<double>(3600, 50.0), 1));
        out.push_back(expect_true("hour of constant samples aggregates to one point",
                                  one.points.size() == 1 && one.points[0].cpu_util == 50.0, "1 point of 50"));
        std::vector<double> alt;
        for (int i = 0; i < 3600; ++i) {
            alt.push_back(i % 2 == 0 ? 0.0 : 100.0);
        }
        const auto half = o::aggregate_hourly(samples(alt, 1));
        out.push_back(expect_eq("alternating hour aggregates to 50", half.points.at(0).cpu_util, 50.0));
        const auto ninety = o::aggregate_hourly(samples(std::vector<double>(90, 1.0), 60));
        out.push_back(expect_eq("ninety minutes gives two points", static_cast<double>(ninety.points.size()), 2));
    }
    return out;
}

namespace {

struct Failures {
    PropertyReport report;
    void check(bool ok, const std::function<std::string()>& describe)
    {
        ++report.cases;
        if (!ok) {
            ++report.failures;
            if (report.first_failure.empty()) {
                report.first_failure = describe();
            }
        }
    }
};

bool close(double a, double b, double rel = 1e-9, double abs_tol = 1e-7)
{
    return std::abs(a - b) <= abs_tol + rel * std::max(std::abs(a), std::abs(b));
}

} // namespace

PropertyReport forecaster_properties(int cases, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> level(-500.0, 500.0);
    std::uniform_real_distribution<double> noise(0.0, 200.0);
    std::uniform_int_distribution<int> length(12, 48);
    std::uniform_int_distribution<int> horizon(1, 40);
    Failures f;

    auto random_series = [&](int n) {
        std::vector<double> s;
        for (int i = 0; i < n; ++i) {
            s.push_back(noise(rng));
        }
        return s;
    };

    for (int i = 0; i < cases; ++i) {
        o::ForecastConfig cfg;
        cfg.horizon = horizon(rng);
        const double c = level(rng);
        const std::vector<double> flat(static_cast<std::size_t>(length(rng)), c);
        const auto fc = o::fit_and_forecast(flat, cfg);
        f.check(fc.values.size() == static_cast<std::size_t>(cfg.horizon) &&
                    std::all_of(fc.values.begin(), fc.values.end(), [&](double v) { return v == c; }),
                [&] { return "constant " + str(c) + " did not forecast itself"; });
    }

    for (int i = 0; i < cases; ++i) {
        o::ForecastConfig cfg;
        cfg.horizon = horizon(rng);
        const double a = level(rng);
        const double step = level(rng) / 10.0;
        std::vector<double> ap;
        const int n = length(rng);
        for (int k = 0; k < n; ++k) {
            ap.push_back(a + step * k);
        }
        const auto fc = o::fit_and_forecast(ap, cfg);
        bool ok = fc.values.size() == static_cast<std::size_t>(cfg.horizon);
        for (std::size_t h = 0; ok && h < fc.values.size(); ++h) {
            ok = close(fc.values[h], ap.back() + step * static_cast<double>(h + 1), 1e-9, 1e-6);
        }
        f.check(ok, [&] { return "progression a=" + str(a) + " step=" + str(step) + " not linear"; });
    }

    for (int i = 0; i < cases; ++i) {
        o::ForecastConfig cfg;
        cfg.horizon = horizon(rng);
        const auto s = random_series(length(rng));
        const auto raw = o::fit_and_forecast(s, cfg, o::Clip::none);
        const auto nn = o::fit_and_forecast(s, cfg, o::Clip::non_negative);
        const auto pct = o::fit_and_forecast(s, cfg, o::Clip::percentage);
        bool ok = raw.values.size() == static_cast<std::size_t>(cfg.horizon) && nn.values.size() == raw.values.size() &&
                  pct.values.size() == raw.values.size();
        for (std::size_t h = 0; ok && h < raw.values.size(); ++h) {
            ok = std::isfinite(raw.values[h]) && nn.values[h] >= 0.0 && pct.values[h] >= 0.0 &&
                 pct.values[h] <= 100.0 && nn.values[h] == std::max(0.0, raw.values[h]) &&
                 pct.values[h] == std::clamp(raw.values[h], 0.0, 100.0);
        }
        f.check(ok, [&] { return "horizon/clip invariant broken for series of length " + std::to_string(s.size()); });
    }

    for (int i = 0; i < cases; ++i) {
        o::ForecastConfig cfg;
        cfg.horizon = horizon(rng);
        const auto s = random_series(length(rng));
        const double c = level(rng);
        std::vector<double> shifted = s;
        for (double& v : shifted) {
            v += c;
        }
        const auto a = o::fit_and_forecast(s, cfg);
        const auto b = o::fit_and_forecast(shifted, cfg);
        bool ok = a.values.size() == b.values.size();
        for (std::size_t h = 0; ok && h < a.values.size(); ++h) {
            ok = close(b.values[h], a.values[h] + c, 1e-9, 1e-6);
        }
        f.check(ok, [&] { return "shift by " + str(c) + " changed the forecast shape"; });
    }

    // Cross-check against the normal-equation oracle on well-conditioned random inputs.
    for (int i = 0; i < cases; ++i) {
        o::ForecastConfig cfg;
        cfg.horizon = horizon(rng);
        const auto s = random_series(length(rng) + 10);
        const auto want = arima_forecast(s, cfg.p, cfg.horizon);
        if (want.empty()) {
            continue;
        }
        const auto got = o::fit_and_forecast(s, cfg);
        bool ok = got.values.size() == want.size();
        for (std::size_t h = 0; ok && h < want.size(); ++h) {
            ok = close(got.values[h], want[h], 1e-6, 1e-6);
        }
        f.check(ok, [&] { return "AR fit disagrees with the normal-equation oracle"; });
    }
    return f.report;
}

PropertyReport registry_properties(int cases, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> byte(0, 255);
    std::uniform_int_distribution<int> layer_count(1, 4);
    std::uniform_int_distribution<int> layer_len(1, 512);
    Failures f;

    auto random_bytes = [&](int n) {
        o::Bytes b(static_cast<std::size_t>(n));
        for (auto& v : b) {
            v = static_cast<std::uint8_t>(byte(rng));
        }
        return b;
    };
    auto random_blob = [&] {
        o::ImageBlob blob;
        const int n = layer_count(rng);
        for (int k = 0; k < n; ++k) {
            blob.layers.push_back(random_bytes(layer_len(rng)));
        }
        return blob;
    };

    {
        o::Registry reg;
        const std::vector<o::OwnerId> owners{o::OwnerId{"alice"}, o::OwnerId{"bob"}, o::OwnerId{"mallory"}};
        std::uniform_int_distribution<std::size_t> pick(0, owners.size() - 1);
        for (int i = 0; i < cases; ++i) {
            const o::ImageName name{"img" + std::to_string(i)};
            const auto& owner = owners[pick(rng)];
            reg.publish_image(owner, owner, name, random_blob(), o::make_limits(200, 128), o::make_limits(100, 64));
            bool ok = true;
            std::size_t legit = 1;
            for (int attempt = 0; attempt < 6; ++attempt) {
                const auto& caller = owners[pick(rng)];
                const bool claims_owner = (rng() & 1U) != 0;
                const auto& claimed = claims_owner ? owner : caller;
                const auto before = reg.history(owner, name).size();
                try {
                    reg.publish_image(caller, claimed, name, random_blob(), o::make_limits(200, 128),
                                      o::make_limits(100, 64));
                    if (caller != claimed) {
                        ok = false;
                    }
                    if (claimed == owner) {
                        ++legit;
                    }
                } catch (const o::OwnershipError&) {
                    ok = ok && caller != claimed;
                }
                const auto history = reg.history(owner, name);
                ok = ok && history.size() >= before && history.size() == legit;
                for (std::size_t h = 0; ok && h < history.size(); ++h) {
                    ok = history[h].owner == owner && (h == 0 || history[h].revision > history[h - 1].revision);
                }
                ok = ok && reg.get_image(owner, name).owner == owner;
            }
            f.check(ok, [&] { return "ownership of " + name.str() + " changed under adversarial updates"; });
        }
    }

    {
        o::Registry reg;
        const o::OwnerId owner{"vendor"};
        for (int i = 0; i < cases; ++i) {
            const auto blob = random_blob();
            const o::ImageName name{"rt" + std::to_string(i)};
            const auto hash = reg.publish_image(owner, owner, name, blob, o::make_limits(200, 128), o::make_limits(100, 64));
            bool ok = reg.fetch_blob(hash) == blob && reg.get_image(owner, name).image_hash == hash;
            for (const auto& layer : blob.layers) {
                ok = ok && reg.fetch_layer(o::content_hash(layer)) == layer;
            }
            f.check(ok, [&] { return "round trip failed for " + name.str(); });
        }
    }

    {
        const auto dir = std::filesystem::temp_directory_path() /
                         ("orchestrion-tamper-" + std::to_string(seed) + "-" + std::to_string(rng()));
        std::filesystem::create_directories(dir);
        o::ContentStore store(dir);
        for (int i = 0; i < cases; ++i) {
            const auto bytes = random_bytes(layer_len(rng));
            const auto hash = store.put(bytes);
            const auto path = dir / hash.hex;
            std::uniform_int_distribution<std::size_t> pos(0, bytes.size() - 1);
            std::uniform_int_distribution<int> flip(1, 255);
            auto corrupted = bytes;
            corrupted[pos(rng)] ^= static_cast<std::uint8_t>(flip(rng));
            {
                std::ofstream out(path, std::ios::binary | std::ios::trunc);
                out.write(reinterpret_cast<const char*>(corrupted.data()), static_cast<std::streamsize>(corrupted.size()));
            }
            bool detected = false;
            try {
                (void)store.get(hash);
            } catch (const o::TamperError&) {
                detected = true;
            }
            f.check(detected, [&] { return "single-byte corruption of " + hash.hex + " went unnoticed"; });
        }
        std::filesystem::remove_all(dir);
    }
    return f.report;
}

} // namespace oracle
