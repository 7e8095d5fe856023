#include <algorithm>
#include <functional>
#include <string>

#include "orchestrion/scenario.hpp"

namespace orchestrion {

namespace {

using nlohmann::json;

constexpr const char* kOwner = "vendor";
constexpr const char* kDevice1 = "10.0.0.1";

DeviceOptions desk_options()
{
    DeviceOptions o;
    o.forecast.bucket_s = 10;
    o.forecast.history = 18;
    o.forecast.horizon = 30;
    o.forecast.min_points = 12;
    o.monitor.scrape_interval_s = 10;
    return o;
}

ScenarioConfig base_scenario(std::string name, std::string description, std::int64_t duration_s)
{
    ScenarioConfig s;
    s.name = std::move(name);
    s.description = std::move(description);
    s.duration_s = duration_s;
    s.seed = 42;
    s.options = desk_options();
    s.devices.push_back(DeviceSpec{DeviceId{kDevice1}, HostConfig{}});
    return s;
}

std::string image_name(WorkloadClass cls, int pattern)
{
    return std::string(cls == WorkloadClass::mem_dominant ? "memory" : "cpu") + std::to_string(pattern);
}

/// Five images of one class; the dominant resource gets request/base, the other a small fixed pair.
void add_images(ScenarioConfig& s, WorkloadClass cls, const std::function<std::pair<int, int>(int)>& limits_for)
{
    for (int p = 1; p <= kPatternCount; ++p) {
        ImageSpec img;
        img.owner = OwnerId{kOwner};
        img.name = ImageName{image_name(cls, p)};
        img.workload = make_workload(p, cls, 60, derive_seed(s.seed, static_cast<std::size_t>(p - 1)));
        const auto [request, base] = limits_for(p);
        if (cls == WorkloadClass::mem_dominant) {
            img.request = make_limits(50, request);
            img.base = make_limits(25, base);
        } else {
            img.request = make_limits(request, 64);
            img.base = make_limits(base, 32);
        }
        s.images.push_back(std::move(img));
    }
}

RequestSpec request_at(const std::string& id, WorkloadClass cls, int pattern, std::int64_t at,
                       const char* device = kDevice1)
{
    RequestSpec r;
    r.id = DeploymentId{id};
    r.owner = OwnerId{kOwner};
    r.image = ImageName{image_name(cls, pattern)};
    r.device = DeviceId{device};
    r.at = at;
    return r;
}

json admission(const std::string& dep, const char* decision, const char* kind, std::int64_t amount)
{
    return json{{"deployment", dep}, {"decision", decision}, {std::string("target.") + kind, amount}};
}

void expect(ScenarioConfig& s, std::string name, std::string kind, json args)
{
    s.expectations.push_back(Expectation{std::move(name), std::move(kind), std::move(args)});
}

double peak_of(WorkloadClass cls, int pattern) { return static_cast<double>(default_peak(pattern, cls)); }

void expect_convergence(ScenarioConfig& s, WorkloadClass cls, const std::vector<std::pair<std::string, int>>& deps,
                        int cycles)
{
    const char* kind = cls == WorkloadClass::mem_dominant ? "mem" : "cpu";
    for (const auto& [dep, pattern] : deps) {
        const double peak = peak_of(cls, pattern);
        expect(s, dep + " " + kind + " limit within [peak, 1.25 peak] after " + std::to_string(cycles) + " cycles",
               "limit_range_after",
               json{{"deployment", dep}, {"resource", kind}, {"after_cycles", cycles}, {"min", peak}, {"max", peak * 1.25}});
    }
}

ScenarioConfig exp1_mem()
{
    auto s = base_scenario("exp1_mem", "Five memory workloads with request 150MB / base 100MB on a 1GB device", 1800);
    add_images(s, WorkloadClass::mem_dominant, [](int) { return std::pair{150, 100}; });
    json seq = json::array();
    std::vector<std::pair<std::string, int>> deps;
    for (int p = 1; p <= 5; ++p) {
        const std::string id = "w" + std::to_string(p);
        s.requests.push_back(request_at(id, WorkloadClass::mem_dominant, p, 0));
        seq.push_back(admission(id, "accept", "mem", 150));
        deps.emplace_back(id, p);
    }
    expect(s, "all five accepted at the request limit", "sequence", json{{"event", "admission"}, {"expect", seq}});
    expect(s, "no OOM kills", "count", json{{"event", "oom_kill"}, {"max", 0}});
    expect_convergence(s, WorkloadClass::mem_dominant, deps, 4);
    return s;
}

ScenarioConfig exp1_cpu()
{
    auto s = base_scenario("exp1_cpu", "Five cpu workloads with request 300m / base 100m; the last two arrive late", 1800);
    add_images(s, WorkloadClass::cpu_dominant, [](int) { return std::pair{300, 100}; });
    const std::int64_t at[] = {0, 30, 60, 320, 325};
    for (int p = 1; p <= 5; ++p) {
        s.requests.push_back(request_at("w" + std::to_string(p), WorkloadClass::cpu_dominant, p, at[p - 1]));
    }
    json seq = json::array({
        admission("w1", "accept", "cpu", 300),
        admission("w2", "accept", "cpu", 300),
        admission("w3", "accept", "cpu", 300),
        admission("w4", "reject", "cpu", 300),
        admission("w4", "accept", "cpu", 100),
        admission("w5", "reject", "cpu", 300),
        admission("w5", "reject", "cpu", 100),
    });
    seq[3]["t"] = 320;
    seq[4]["t"] = 320;
    seq[4]["role"] = "base";
    seq[5]["t"] = 325;
    seq[6]["t"] = 325;
    seq[6]["role"] = "base";
    expect(s, "admission sequence", "sequence", json{{"event", "admission"}, {"expect", seq}});
    expect(s, "w5 is rejected", "final_state", json{{"deployment", "w5"}, {"state", "rejected"}});
    return s;
}

ScenarioConfig exp2_mem()
{
    auto s = base_scenario("exp2_mem", "Memory workloads misconfigured with request 15MB / base 10MB", 1800);
    add_images(s, WorkloadClass::mem_dominant, [](int) { return std::pair{15, 10}; });
    std::vector<std::pair<std::string, int>> deps;
    for (int p = 1; p <= 5; ++p) {
        const std::string id = "w" + std::to_string(p);
        s.requests.push_back(request_at(id, WorkloadClass::mem_dominant, p, 0));
        deps.emplace_back(id, p);
        expect(s, id + " killed at least twice", "count",
               json{{"event", "oom_kill"}, {"where", {{"deployment", id}}}, {"min", 2}});
        // Retry k targets base + (k-2) * 20MB until the pattern's peak fits.
        json seq = json::array();
        const auto peak = default_peak(p, WorkloadClass::mem_dominant);
        for (int k = 2;; ++k) {
            const std::int64_t target = 10 + (k - 2) * 20;
            seq.push_back(json{{"deployment", id}, {"attempt", k}, {"target.mem", target}});
            if (target >= peak) {
                break;
            }
        }
        expect(s, id + " retry escalation", "sequence",
               json{{"event", "retry"}, {"where", {{"deployment", id}}}, {"expect", seq}});
        expect(s, id + " eventually runs", "final_state", json{{"deployment", id}, {"state", "running"}});
    }
    expect_convergence(s, WorkloadClass::mem_dominant, deps, 4);
    return s;
}

ScenarioConfig exp2_cpu()
{
    auto s = base_scenario("exp2_cpu", "Cpu workloads misconfigured with request 100m / base 50m", 2400);
    add_images(s, WorkloadClass::cpu_dominant, [](int) { return std::pair{100, 50}; });
    json seq = json::array();
    json all = json::array();
    for (int p = 1; p <= 5; ++p) {
        const std::string id = "w" + std::to_string(p);
        s.requests.push_back(request_at(id, WorkloadClass::cpu_dominant, p, 0));
        seq.push_back(admission(id, "accept", "cpu", 100));
        all.push_back(id);
    }
    expect(s, "all five accepted at 100m", "sequence", json{{"event", "admission"}, {"expect", seq}});
    expect(s, "first window fully throttled where demand exceeds the limit", "initial_throttle",
           json{{"deployments", all}, {"equals", 100.0}});
    expect(s, "throttling below the limit after four cycles", "throttle_below_after",
           json{{"deployments", all}, {"after_cycles", 4}, {"below", 25.0}});
    expect(s, "backlog stops growing after four cycles", "backlog_not_growing_after",
           json{{"deployments", all}, {"after_cycles", 4}});
    return s;
}

ScenarioConfig exp3(WorkloadClass cls)
{
    const bool mem = cls == WorkloadClass::mem_dominant;
    auto s = base_scenario(mem ? "exp3_mem" : "exp3_cpu",
                           mem ? "Two memory workloads, then two more once the first pair is stable"
                               : "Two cpu workloads, then two more once the first pair is stable",
                           3600);
    add_images(s, cls, [mem](int) { return mem ? std::pair{150, 100} : std::pair{300, 100}; });
    s.requests.push_back(request_at("w1", cls, 1, 0));
    s.requests.push_back(request_at("w2", cls, 2, 0));
    for (int p : {3, 4}) {
        RequestSpec r = request_at("w" + std::to_string(p), cls, p, 0);
        r.at.reset();
        r.after_stable = {DeploymentId{"w1"}, DeploymentId{"w2"}};
        s.requests.push_back(std::move(r));
    }
    const char* kind = mem ? "mem" : "cpu";
    const std::int64_t step = mem ? 20 : 50;
    expect(s, "existing workloads keep their limits while newcomers warm up", "limit_stable_during",
           json{{"deployments", {"w1", "w2"}},
                {"resource", kind},
                {"from_deployed", "w3"},
                {"duration_s", s.options.policy.warmup_s},
                {"max_change", step}});
    expect(s, "newcomers are admitted", "count",
           json{{"event", "deployed"}, {"where", {{"role", "request"}}}, {"min", 4}});
    expect_convergence(s, cls, {{"w3", 3}, {"w4", 4}}, 4);
    return s;
}

ScenarioConfig exp4_mem(std::int64_t avail)
{
    auto s = base_scenario("exp4_mem_" + std::to_string(avail),
                           "Memory workloads on a device with " + std::to_string(avail) + "MB available", 600);
    s.devices.front().host.preoccupied = make_limits(0, 1000 - avail);
    add_images(s, WorkloadClass::mem_dominant, [](int) { return std::pair{150, 100}; });
    for (int p = 1; p <= 3; ++p) {
        s.requests.push_back(request_at("w" + std::to_string(p), WorkloadClass::mem_dominant, p, (p - 1) * 30));
    }
    json seq;
    if (avail == 400) {
        seq = json::array({admission("w1", "accept", "mem", 150), admission("w2", "accept", "mem", 150),
                           admission("w3", "reject", "mem", 150), admission("w3", "reject", "mem", 100)});
    } else {
        seq = json::array({admission("w1", "accept", "mem", 150), admission("w2", "reject", "mem", 150),
                           admission("w2", "reject", "mem", 100), admission("w3", "reject", "mem", 150),
                           admission("w3", "reject", "mem", 100)});
    }
    expect(s, "admission decisions", "sequence", json{{"event", "admission"}, {"expect", seq}});
    return s;
}

ScenarioConfig exp4_cpu(std::int64_t avail)
{
    auto s = base_scenario("exp4_cpu_" + std::to_string(avail),
                           "Cpu workloads on a device with " + std::to_string(avail) + "m available", 1200);
    s.devices.front().host.preoccupied = make_limits(1000 - avail, 0);
    const bool roomy = avail == 350;
    add_images(s, WorkloadClass::cpu_dominant,
               [roomy](int p) { return roomy && p == 1 ? std::pair{300, 100} : std::pair{100, 50}; });
    for (int p = 1; p <= 3; ++p) {
        s.requests.push_back(request_at("w" + std::to_string(p), WorkloadClass::cpu_dominant, p, (p - 1) * 30));
    }
    json seq;
    if (roomy) {
        seq = json::array({admission("w1", "accept", "cpu", 300), admission("w2", "reject", "cpu", 100),
                           admission("w2", "reject", "cpu", 50), admission("w3", "reject", "cpu", 100),
                           admission("w3", "reject", "cpu", 50)});
    } else {
        seq = json::array({admission("w1", "reject", "cpu", 100), admission("w1", "accept", "cpu", 50),
                           admission("w2", "reject", "cpu", 100), admission("w2", "reject", "cpu", 50),
                           admission("w3", "reject", "cpu", 100), admission("w3", "reject", "cpu", 50)});
        expect(s, "w1 is never scaled up", "limit_never_above",
               json{{"deployment", "w1"}, {"resource", "cpu"}, {"max", 50}});
        expect(s, "w1 keeps getting throttled", "throttle_recurring",
               json{{"deployment", "w1"}, {"after_t", s.options.policy.warmup_s}, {"min_windows", 10}});
        expect(s, "an upscale was proposed but not approved", "count",
               json{{"event", "optimization"}, {"where", {{"deployment", "w1"}, {"changed", false}, {"proposed.cpu", {{"gt", 50}}}}},
                    {"min", 1}});
    }
    expect(s, "admission decisions", "sequence", json{{"event", "admission"}, {"expect", seq}});
    return s;
}

ScenarioConfig cluster_3dev()
{
    auto s = base_scenario("cluster_3dev", "Three identical devices; four memory workloads sent to device 1", 600);
    s.devices.push_back(DeviceSpec{DeviceId{"10.0.0.2"}, HostConfig{}});
    s.devices.push_back(DeviceSpec{DeviceId{"10.0.0.3"}, HostConfig{}});
    add_images(s, WorkloadClass::mem_dominant, [](int) { return std::pair{150, 100}; });
    json seq = json::array();
    const char* executors[] = {"10.0.0.1", "10.0.0.2", "10.0.0.3", "10.0.0.1"};
    for (int p = 1; p <= 4; ++p) {
        const std::string id = "w" + std::to_string(p);
        s.requests.push_back(request_at(id, WorkloadClass::mem_dominant, p, 5 + (p - 1) * 30));
        seq.push_back(json{{"deployment", id}, {"executor", executors[p - 1]}});
    }
    expect(s, "executor sequence", "sequence", json{{"event", "cluster_select"}, {"expect", seq}});
    expect(s, "one analysis request per deployment", "analysis_requests_per_deployment", json{{"equals", 1}});
    return s;
}

} // namespace

std::vector<ScenarioConfig> builtin_scenarios()
{
    std::vector<ScenarioConfig> out;
    out.push_back(exp1_mem());
    out.push_back(exp1_cpu());
    out.push_back(exp2_mem());
    out.push_back(exp2_cpu());
    out.push_back(exp3(WorkloadClass::mem_dominant));
    out.push_back(exp3(WorkloadClass::cpu_dominant));
    out.push_back(exp4_mem(400));
    out.push_back(exp4_mem(200));
    out.push_back(exp4_cpu(350));
    out.push_back(exp4_cpu(100));
    out.push_back(cluster_3dev());
    for (const auto& s : out) {
        s.validate();
    }
    return out;
}

std::vector<std::string> builtin_names()
{
    std::vector<std::string> names;
    for (const auto& s : builtin_scenarios()) {
        names.push_back(s.name);
    }
    return names;
}

ScenarioConfig builtin_scenario(const std::string& name)
{
    for (auto& s : builtin_scenarios()) {
        if (s.name == name) {
            return s;
        }
    }
    throw NotFoundError("no built-in scenario named '" + name + "'");
}

} // namespace orchestrion
