#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "orchestrion/forecaster.hpp"
#include "orchestrion/hostsim.hpp"
#include "orchestrion/simulation.hpp"

using namespace orchestrion;

static void BM_FitAndForecast(benchmark::State& state)
{
    ForecastConfig config;
    config.history = static_cast<int>(state.range(0));
    std::vector<double> series(static_cast<std::size_t>(config.history));
    for (std::size_t i = 0; i < series.size(); ++i) {
        series[i] = 100.0 + 40.0 * std::sin(static_cast<double>(i) * 0.7);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_and_forecast(series, config, Clip::non_negative));
    }
}
BENCHMARK(BM_FitAndForecast)->Arg(18)->Arg(72)->Arg(288);

static void BM_HostTick(benchmark::State& state)
{
    Host host(HostConfig{make_limits(100000, 100000), make_limits(0, 0), 1});
    for (int i = 0; i < state.range(0); ++i) {
        host.run_container(make_workload(1 + i % 5, i % 2 == 0 ? WorkloadClass::mem_dominant : WorkloadClass::cpu_dominant),
                           make_limits(300, 150));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(host.tick());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_HostTick)->Arg(5)->Arg(50);

static void BM_RunScenario(benchmark::State& state)
{
    const auto config = builtin_scenario(state.range(0) == 0 ? "exp1_mem" : "cluster_3dev");
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_scenario(config));
    }
}
BENCHMARK(BM_RunScenario)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
