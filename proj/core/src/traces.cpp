#include "orchestrion/traces.hpp"

#include <cstdio>
#include <fstream>
#include <set>

namespace orchestrion {

namespace {

void append_row(std::string& out, const TraceRow& r)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, "%lld,%s,%.3f,%lld,%.3f,%.3f,%lld,%s\n", static_cast<long long>(r.t),
                  r.container.c_str(), r.cpu_util, static_cast<long long>(r.cpu_limit), r.cpu_throttle, r.mem_util,
                  static_cast<long long>(r.mem_limit), r.status.c_str());
    out += buf;
}

void write_file(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ConfigError("cannot write " + path.string());
    }
    out << content;
}

} // namespace

std::string metrics_csv(const std::vector<TraceRow>& rows)
{
    std::string out = std::string(kMetricsCsvHeader) + "\n";
    for (const auto& r : rows) {
        append_row(out, r);
    }
    return out;
}

std::string container_csv(const std::vector<TraceRow>& rows, const std::string& container)
{
    std::string out = std::string(kMetricsCsvHeader) + "\n";
    for (const auto& r : rows) {
        if (r.container == container) {
            append_row(out, r);
        }
    }
    return out;
}

nlohmann::json summary_json(const RunReport& report)
{
    nlohmann::json deployments = nlohmann::json::object();
    for (const auto& [id, status] : report.deployments) {
        deployments[id] = status;
    }
    return nlohmann::json{{"scenario", report.scenario},
                          {"seed", report.seed},
                          {"duration_s", report.duration_s},
                          {"passed", report.passed()},
                          {"expectations", report.expectations},
                          {"deployments", std::move(deployments)},
                          {"events", report.events.size()}};
}

void write_run(const RunReport& report, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir / "containers");
    write_file(dir / "metrics.csv", metrics_csv(report.trace));
    std::set<std::string> containers;
    for (const auto& r : report.trace) {
        containers.insert(r.container);
    }
    for (const auto& c : containers) {
        write_file(dir / "containers" / (c + ".csv"), container_csv(report.trace, c));
    }
    write_file(dir / "events.jsonl", report.events_jsonl());
    write_file(dir / "summary.json", summary_json(report).dump(2) + "\n");
}

} // namespace orchestrion
