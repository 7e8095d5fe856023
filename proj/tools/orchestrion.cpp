#include <chrono>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "orchestrion/ingress.hpp"
#include "orchestrion/scenario.hpp"
#include "orchestrion/simulation.hpp"
#include "orchestrion/traces.hpp"

namespace {

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) { g_stop = 1; }

orchestrion::ScenarioConfig pick_scenario(const std::string& file, const std::string& builtin)
{
    if (!builtin.empty()) {
        return orchestrion::builtin_scenario(builtin);
    }
    if (file.empty()) {
        throw orchestrion::ConfigError("give a scenario file or --builtin NAME");
    }
    return orchestrion::load_scenario(file);
}

int run_command(const std::string& file, const std::string& builtin, std::optional<std::uint64_t> seed,
                const std::string& out, bool quiet)
{
    const auto config = pick_scenario(file, builtin);
    const auto report = orchestrion::run_scenario(config, seed);
    if (!out.empty()) {
        orchestrion::write_run(report, out);
    }
    if (!quiet) {
        std::printf("scenario %s seed %llu: %zu events, %zu samples, %.2fs\n", report.scenario.c_str(),
                    static_cast<unsigned long long>(report.seed), report.events.size(), report.trace.size(),
                    report.wall_seconds);
        for (const auto& [id, status] : report.deployments) {
            std::printf("  %-6s %s\n", id.c_str(), status.dump().c_str());
        }
    }
    for (const auto& e : report.expectations) {
        std::printf("%s  %s (%s)\n", e.passed ? "ok  " : "FAIL", e.name.c_str(), e.detail.c_str());
    }
    return report.passed() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"orchestrion: resource-aware container orchestration on simulated edge devices"};
    app.require_subcommand(1);

    std::string file;
    std::string builtin;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool quiet = false;
    auto* run = app.add_subcommand("run", "Run a scenario and check its expectations");
    run->add_option("scenario", file, "Scenario JSON file");
    run->add_option("--builtin", builtin, "Name of a built-in scenario");
    run->add_option("--seed", seed, "Override the scenario seed");
    run->add_option("--out", out, "Directory for metrics.csv, events.jsonl and summary.json");
    run->add_flag("-q,--quiet", quiet, "Only print expectation results");

    auto* list = app.add_subcommand("list-scenarios", "List built-in scenarios");

    std::string dump_name;
    auto* dump = app.add_subcommand("show-scenario", "Print a built-in scenario as JSON");
    dump->add_option("name", dump_name)->required();

    orchestrion::IngressOptions serve_opts;
    std::string serve_file;
    std::string serve_builtin = "exp1_mem";
    auto* serve = app.add_subcommand("serve", "Run devices in real time and accept deployments over HTTP");
    serve->add_option("scenario", serve_file, "Scenario JSON file supplying devices and images");
    serve->add_option("--builtin", serve_builtin, "Built-in scenario supplying devices and images");
    serve->add_option("--host", serve_opts.host);
    serve->add_option("--port", serve_opts.port);
    serve->add_option("--tick-ms", serve_opts.tick_ms, "Wall-clock milliseconds per simulated second");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            return run_command(file, builtin, seed, out, quiet);
        }
        if (*list) {
            for (const auto& s : orchestrion::builtin_scenarios()) {
                std::printf("%-14s %s\n", s.name.c_str(), s.description.c_str());
            }
            return 0;
        }
        if (*dump) {
            std::cout << nlohmann::json(orchestrion::builtin_scenario(dump_name)).dump(2) << "\n";
            return 0;
        }
        if (*serve) {
            auto config = serve_file.empty() ? orchestrion::builtin_scenario(serve_builtin)
                                             : orchestrion::load_scenario(serve_file);
            config.requests.clear();
            config.expectations.clear();
            orchestrion::IngressService service(config, serve_opts);
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            const int port = service.start();
            std::printf("listening on %s:%d\n", serve_opts.host.c_str(), port);
            std::fflush(stdout);
            while (g_stop == 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(200));
            }
            service.stop();
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
