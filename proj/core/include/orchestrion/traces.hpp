#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "orchestrion/simulation.hpp"

namespace orchestrion {

inline constexpr const char* kMetricsCsvHeader = "t,container,cpu_util,cpu_limit,cpu_throttle,mem_util,mem_limit,status";

/// All rows as one CSV document with fixed three-decimal formatting.
std::string metrics_csv(const std::vector<TraceRow>& rows);
/// Rows of one container only.
std::string container_csv(const std::vector<TraceRow>& rows, const std::string& container);

/// Run summary: scenario, seed, expectation results, final deployment states.
nlohmann::json summary_json(const RunReport& report);

/// Writes metrics.csv, containers/<id>.csv, events.jsonl and summary.json into `dir`.
void write_run(const RunReport& report, const std::filesystem::path& dir);

} // namespace orchestrion
