#include "orchestrion/metrics.hpp"

namespace orchestrion {

std::string_view to_string(ContainerStatus status)
{
    switch (status) {
    case ContainerStatus::running:
        return "running";
    case ContainerStatus::killed_oom:
        return "killed_oom";
    case ContainerStatus::stopped:
        return "stopped";
    }
    return "?";
}

ContainerStatus parse_container_status(std::string_view text)
{
    if (text == "running") {
        return ContainerStatus::running;
    }
    if (text == "killed_oom") {
        return ContainerStatus::killed_oom;
    }
    if (text == "stopped") {
        return ContainerStatus::stopped;
    }
    throw ContractViolation("unknown container status '" + std::string(text) + "'");
}

void MetricsSeries::append(const SeriesPoint& point)
{
    if (!points.empty() && point.t <= points.back().t) {
        throw ContractViolation("series '" + key + "': timestamps must be strictly increasing");
    }
    points.push_back(point);
}

void to_json(nlohmann::json& j, const SeriesPoint& p)
{
    j = nlohmann::json::array({p.t, p.cpu_util, p.mem_util, p.throttle_pct, p.cpu_limit, p.mem_limit});
}

void from_json(const nlohmann::json& j, SeriesPoint& p)
{
    if (!j.is_array() || j.size() != 6) {
        throw ProtocolError("series point must be a 6-element array");
    }
    p.t = j[0].get<std::int64_t>();
    p.cpu_util = j[1].get<double>();
    p.mem_util = j[2].get<double>();
    p.throttle_pct = j[3].get<double>();
    p.cpu_limit = j[4].get<std::int64_t>();
    p.mem_limit = j[5].get<std::int64_t>();
}

void to_json(nlohmann::json& j, const MetricsSeries& s)
{
    j = nlohmann::json{
        {"key", s.key},
        {"retention_s", s.retention_s},
        {"columns", {"t", "cpu_util", "mem_util", "throttle_pct", "cpu_limit", "mem_limit"}},
        {"points", s.points},
    };
}

void from_json(const nlohmann::json& j, MetricsSeries& s)
{
    s.key = j.at("key").get<std::string>();
    s.retention_s = j.at("retention_s").get<std::int64_t>();
    s.points = j.at("points").get<std::vector<SeriesPoint>>();
}

std::string serialize(const MetricsSeries& series)
{
    return nlohmann::json(series).dump();
}

MetricsSeries deserialize_series(std::string_view bytes)
{
    try {
        return nlohmann::json::parse(bytes).get<MetricsSeries>();
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("metrics series: ") + e.what());
    }
}

} // namespace orchestrion
