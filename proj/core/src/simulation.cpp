#include "orchestrion/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

namespace orchestrion {

using nlohmann::json;

void to_json(json& j, const ExpectationResult& r)
{
    j = json{{"name", r.name}, {"kind", r.kind}, {"passed", r.passed}, {"detail", r.detail}};
}

bool RunReport::passed() const
{
    return std::all_of(expectations.begin(), expectations.end(), [](const auto& e) { return e.passed; });
}

std::string RunReport::events_jsonl() const
{
    std::string out;
    for (const auto& e : events) {
        out += json(e).dump();
        out += '\n';
    }
    return out;
}

Cluster::Cluster(const ScenarioConfig& config) : config_(config)
{
    config_.validate();
    for (const auto& img : config_.images) {
        registry_.publish_image(img.owner, img.owner, img.name, blob_for_workload(img.workload), img.request,
                                img.base);
    }
    for (const auto& d : config_.devices) {
        devices_.push_back(std::make_unique<Device>(d.id, d.host, registry_, config_.options, &log_));
    }
    if (devices_.size() > 1) {
        connect_cluster(devices());
    }
}

std::int64_t Cluster::now() const { return devices_.front()->host().now(); }

std::vector<Device*> Cluster::devices() const
{
    std::vector<Device*> out;
    for (const auto& d : devices_) {
        out.push_back(d.get());
    }
    return out;
}

Device& Cluster::device(const DeviceId& id)
{
    for (auto& d : devices_) {
        if (d->id() == id) {
            return *d;
        }
    }
    throw NotFoundError("no device " + id.str());
}

void Cluster::pump()
{
    bool progressed = true;
    while (progressed) {
        progressed = false;
        for (auto& d : devices_) {
            progressed = d->pump_one() || progressed;
        }
    }
}

DeploymentId Cluster::submit(const DeviceId& device_id, const OwnerId& owner, const ImageName& image,
                             std::optional<DeploymentId> id)
{
    return device(device_id).deployer().submit(owner, image, std::move(id));
}

std::optional<json> Cluster::status(const DeploymentId& id) const
{
    std::optional<json> fallback;
    for (const auto& d : devices_) {
        auto s = d->deployer().status(id);
        if (!s) {
            continue;
        }
        if (s->value("state", std::string{}) != to_string(DeploymentState::not_selected)) {
            return s;
        }
        if (!fallback) {
            fallback = std::move(s);
        }
    }
    return fallback;
}

bool Cluster::deployment_stable(const DeploymentId& id) const
{
    for (const auto& d : devices_) {
        const Knowledge& k = d->knowledge();
        if (!k.has_deployment(id)) {
            continue;
        }
        const DeploymentRecord& dep = k.deployment(id);
        if (dep.state != DeploymentState::running || !dep.container || !k.has_container(*dep.container)) {
            return false;
        }
        return k.container(*dep.container).stable();
    }
    return false;
}

void Cluster::inject_due_requests(std::int64_t t)
{
    for (const auto& r : config_.requests) {
        if (sent_.contains(r.id)) {
            continue;
        }
        bool due = false;
        if (r.at) {
            due = *r.at == t;
        } else {
            due = std::all_of(r.after_stable.begin(), r.after_stable.end(),
                              [&](const DeploymentId& dep) { return deployment_stable(dep); });
        }
        if (due) {
            sent_.insert(r.id);
            submit(r.device, r.owner, r.image, r.id);
        }
    }
}

void Cluster::record_trace(Device& device, const MetricsSample& sample)
{
    for (const auto& c : sample.containers) {
        TraceRow row;
        row.t = sample.timestamp;
        row.device = device.id().str();
        row.container = c.id.str();
        if (device.knowledge().has_container(c.id)) {
            row.deployment = device.knowledge().container(c.id).deployment.str();
        }
        row.cpu_util = c.cpu_util;
        row.cpu_limit = c.limits[ResourceKind::cpu].value();
        row.cpu_throttle = c.throttle_pct;
        row.mem_util = c.mem_util;
        row.mem_limit = c.limits[ResourceKind::mem].value();
        row.status = std::string(to_string(c.status));
        row.backlog = device.host().container(c.id).backlog;
        trace_.push_back(std::move(row));
    }
}

void Cluster::step()
{
    const std::int64_t t = now();
    for (auto& d : devices_) {
        if (d->monitor().scrape_due(t)) {
            record_trace(*d, d->monitor().scrape_and_publish());
        }
    }
    for (auto& d : devices_) {
        d->monitor().enforce_retention();
        d->monitor().schedule_optimization();
    }
    inject_due_requests(t);
    pump();
    for (auto& d : devices_) {
        d->monitor().detect_premature_exit(d->host().tick());
    }
    pump();
}

ScenarioConfig with_seed(ScenarioConfig config, std::uint64_t seed)
{
    config.seed = seed;
    for (std::size_t i = 0; i < config.images.size(); ++i) {
        if (!config.images[i].explicit_seed) {
            config.images[i].workload.seed = derive_seed(seed, i);
        }
    }
    return config;
}

RunReport run_scenario(const ScenarioConfig& input, std::optional<std::uint64_t> seed)
{
    const auto started = std::chrono::steady_clock::now();
    const ScenarioConfig config = seed ? with_seed(input, *seed) : input;
    Cluster cluster(config);
    while (cluster.now() < config.duration_s) {
        cluster.step();
    }

    RunReport report;
    report.scenario = config.name;
    report.seed = config.seed;
    report.duration_s = config.duration_s;
    report.events = cluster.log().entries();
    report.trace = cluster.trace();
    for (Device* d : cluster.devices()) {
        report.bus_traces[d->id().str()] = d->bus().trace();
    }
    for (const auto& r : config.requests) {
        if (auto s = cluster.status(r.id)) {
            report.deployments[r.id.str()] = *s;
        } else {
            report.deployments[r.id.str()] = json{{"id", r.id.str()}, {"state", "unsent"}};
        }
    }
    report.expectations = evaluate_expectations(config, report);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

// ---------------------------------------------------------------------------------------------
// Expectations

const json* lookup_path(const json& data, const std::string& path)
{
    const json* node = &data;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (!node->is_object()) {
            return nullptr;
        }
        auto it = node->find(key);
        if (it == node->end()) {
            return nullptr;
        }
        node = &*it;
        if (dot == std::string::npos) {
            return node;
        }
        start = dot + 1;
    }
}

namespace {

bool value_matches(const json& actual, const json& wanted)
{
    if (wanted.is_object() && (wanted.contains("gt") || wanted.contains("lt"))) {
        if (!actual.is_number()) {
            return false;
        }
        const double v = actual.get<double>();
        if (wanted.contains("gt") && !(v > wanted.at("gt").get<double>())) {
            return false;
        }
        if (wanted.contains("lt") && !(v < wanted.at("lt").get<double>())) {
            return false;
        }
        return true;
    }
    if (actual.is_number() && wanted.is_number()) {
        return std::abs(actual.get<double>() - wanted.get<double>()) <= 1e-9;
    }
    if (wanted.is_object() && actual.is_object()) {
        // A nested pattern only constrains the keys it names.
        for (const auto& [key, sub] : wanted.items()) {
            auto it = actual.find(key);
            if (it == actual.end() || !value_matches(*it, sub)) {
                return false;
            }
        }
        return true;
    }
    return actual == wanted;
}

} // namespace

bool event_matches(const Event& event, const json& pattern)
{
    for (const auto& [key, wanted] : pattern.items()) {
        if (key == "t") {
            if (!value_matches(json(event.t), wanted)) {
                return false;
            }
            continue;
        }
        const json* actual = lookup_path(event.data, key);
        if (actual == nullptr || !value_matches(*actual, wanted)) {
            return false;
        }
    }
    return true;
}

namespace {

struct Context {
    const ScenarioConfig& config;
    const RunReport& report;

    std::vector<const Event*> select(const std::string& type, const json& where) const
    {
        std::vector<const Event*> out;
        for (const auto& e : report.events) {
            if (e.type == type && event_matches(e, where)) {
                out.push_back(&e);
            }
        }
        return out;
    }

    const Event* deployed(const std::string& dep, bool last) const
    {
        const Event* found = nullptr;
        for (const auto& e : report.events) {
            if (e.type == "deployed" && e.data.value("deployment", std::string{}) == dep) {
                found = &e;
                if (!last) {
                    break;
                }
            }
        }
        return found;
    }

    std::vector<const TraceRow*> rows_of_container(const std::string& container) const
    {
        std::vector<const TraceRow*> out;
        for (const auto& r : report.trace) {
            if (r.container == container) {
                out.push_back(&r);
            }
        }
        return out;
    }

    std::vector<const TraceRow*> rows_of_deployment(const std::string& dep) const
    {
        std::vector<const TraceRow*> out;
        for (const auto& r : report.trace) {
            if (r.deployment == dep) {
                out.push_back(&r);
            }
        }
        return out;
    }

    /// Time after which the final container of `dep` has been through `args` cycles (or args.after_t).
    std::optional<std::pair<std::int64_t, std::string>> threshold(const std::string& dep, const json& args,
                                                                  std::string& why) const
    {
        const Event* d = deployed(dep, true);
        if (d == nullptr) {
            why = dep + " was never deployed";
            return std::nullopt;
        }
        const std::string container = d->data.at("container").get<std::string>();
        if (args.contains("after_t")) {
            return std::pair{args.at("after_t").get<std::int64_t>(), container};
        }
        const auto cycles = args.at("after_cycles").get<std::int64_t>();
        const auto& policy = config.options.policy;
        return std::pair{d->t + policy.warmup_s + (cycles - 1) * policy.optimization_interval_s, container};
    }

    const WorkloadSpec* workload_of(const std::string& dep) const
    {
        for (const auto& r : config.requests) {
            if (r.id.str() != dep) {
                continue;
            }
            for (const auto& img : config.images) {
                if (img.owner == r.owner && img.name == r.image) {
                    return &img.workload;
                }
            }
        }
        return nullptr;
    }
};

std::string fmt(double v)
{
    std::ostringstream os;
    os << v;
    return os.str();
}

std::vector<std::string> deployment_list(const json& args)
{
    std::vector<std::string> out;
    if (args.contains("deployments")) {
        for (const auto& d : args.at("deployments")) {
            out.push_back(d.get<std::string>());
        }
    }
    if (args.contains("deployment")) {
        out.push_back(args.at("deployment").get<std::string>());
    }
    return out;
}

std::int64_t limit_of(const TraceRow& r, const std::string& kind)
{
    return kind == "cpu" ? r.cpu_limit : r.mem_limit;
}

bool check_sequence(const Context& ctx, const json& args, std::string& detail)
{
    const auto events = ctx.select(args.at("event").get<std::string>(), args.value("where", json::object()));
    const auto& expect = args.at("expect");
    for (std::size_t i = 0; i < expect.size(); ++i) {
        if (i >= events.size()) {
            detail = "missing item " + std::to_string(i) + ": " + expect[i].dump();
            return false;
        }
        if (!event_matches(*events[i], expect[i])) {
            detail = "item " + std::to_string(i) + " expected " + expect[i].dump() + " got t=" +
                     std::to_string(events[i]->t) + " " + events[i]->data.dump();
            return false;
        }
    }
    if (events.size() != expect.size()) {
        detail = "expected " + std::to_string(expect.size()) + " events, got " + std::to_string(events.size()) +
                 "; first extra: " + events[expect.size()]->data.dump();
        return false;
    }
    detail = std::to_string(events.size()) + " events in order";
    return true;
}

bool check_count(const Context& ctx, const json& args, std::string& detail)
{
    const auto n = static_cast<std::int64_t>(
        ctx.select(args.at("event").get<std::string>(), args.value("where", json::object())).size());
    detail = "count " + std::to_string(n);
    if (args.contains("min") && n < args.at("min").get<std::int64_t>()) {
        return false;
    }
    if (args.contains("max") && n > args.at("max").get<std::int64_t>()) {
        return false;
    }
    if (args.contains("equals") && n != args.at("equals").get<std::int64_t>()) {
        return false;
    }
    return true;
}

bool check_final_state(const Context& ctx, const json& args, std::string& detail)
{
    const auto dep = args.at("deployment").get<std::string>();
    auto it = ctx.report.deployments.find(dep);
    if (it == ctx.report.deployments.end()) {
        detail = dep + " unknown";
        return false;
    }
    const auto state = it->second.value("state", std::string{});
    detail = dep + " is " + state;
    return state == args.at("state").get<std::string>();
}

bool check_limit_range_after(const Context& ctx, const json& args, std::string& detail)
{
    const auto dep = args.at("deployment").get<std::string>();
    const auto kind = args.at("resource").get<std::string>();
    const auto th = ctx.threshold(dep, args, detail);
    if (!th) {
        return false;
    }
    const double lo = args.at("min").get<double>();
    const double hi = args.at("max").get<double>();
    std::size_t checked = 0;
    for (const TraceRow* r : ctx.rows_of_container(th->second)) {
        if (r->t <= th->first) {
            continue;
        }
        ++checked;
        const auto v = static_cast<double>(limit_of(*r, kind));
        if (v < lo || v > hi) {
            detail = th->second + " " + kind + " limit " + fmt(v) + " at t=" + std::to_string(r->t) + " outside [" +
                     fmt(lo) + ", " + fmt(hi) + "]";
            return false;
        }
    }
    if (checked == 0) {
        detail = "no samples after t=" + std::to_string(th->first);
        return false;
    }
    detail = std::to_string(checked) + " samples in range after t=" + std::to_string(th->first);
    return true;
}

bool check_throttle_below_after(const Context& ctx, const json& args, std::string& detail)
{
    const double below = args.at("below").get<double>();
    std::size_t checked = 0;
    for (const auto& dep : deployment_list(args)) {
        const auto th = ctx.threshold(dep, args, detail);
        if (!th) {
            return false;
        }
        for (const TraceRow* r : ctx.rows_of_container(th->second)) {
            if (r->t <= th->first) {
                continue;
            }
            ++checked;
            if (!(r->cpu_throttle < below)) {
                detail = th->second + " throttle " + fmt(r->cpu_throttle) + "% at t=" + std::to_string(r->t);
                return false;
            }
        }
    }
    detail = std::to_string(checked) + " windows below " + fmt(below) + "%";
    return checked > 0;
}

bool check_backlog_not_growing_after(const Context& ctx, const json& args, std::string& detail)
{
    std::string summary;
    for (const auto& dep : deployment_list(args)) {
        const auto th = ctx.threshold(dep, args, detail);
        if (!th) {
            return false;
        }
        std::optional<double> first;
        double last = 0.0;
        for (const TraceRow* r : ctx.rows_of_container(th->second)) {
            if (r->t < th->first) {
                continue;
            }
            if (!first) {
                first = r->backlog;
            }
            last = r->backlog;
        }
        if (!first) {
            detail = "no samples for " + dep + " after t=" + std::to_string(th->first);
            return false;
        }
        if (last > *first + 1e-6) {
            detail = dep + " backlog grew from " + fmt(*first) + " to " + fmt(last);
            return false;
        }
        summary += dep + ":" + fmt(*first) + "->" + fmt(last) + " ";
    }
    detail = summary;
    return true;
}

bool check_initial_throttle(const Context& ctx, const json& args, std::string& detail)
{
    const double wanted = args.at("equals").get<double>();
    std::string summary;
    for (const auto& dep : deployment_list(args)) {
        const Event* d = ctx.deployed(dep, false);
        const WorkloadSpec* spec = ctx.workload_of(dep);
        if (d == nullptr || spec == nullptr) {
            detail = dep + " was never deployed";
            return false;
        }
        const auto container = d->data.at("container").get<std::string>();
        const auto rows = ctx.rows_of_container(container);
        if (rows.empty()) {
            detail = container + " has no samples";
            return false;
        }
        const TraceRow& first = *rows.front();
        const std::int64_t limit = first.cpu_limit;
        const std::int64_t from = std::max(d->t, first.t - ctx.config.options.monitor.scrape_interval_s);
        bool all_exceed = true;
        for (std::int64_t tick = from; tick < first.t; ++tick) {
            if (workload_demand(*spec, tick - d->t)[ResourceKind::cpu].value() <= limit) {
                all_exceed = false;
            }
        }
        if (!all_exceed) {
            summary += dep + ":skip ";
            continue;
        }
        if (std::abs(first.cpu_throttle - wanted) > 1e-9) {
            detail = dep + " first-window throttle " + fmt(first.cpu_throttle) + "%";
            return false;
        }
        summary += dep + ":" + fmt(first.cpu_throttle) + " ";
    }
    detail = summary;
    return true;
}

bool check_limit_stable_during(const Context& ctx, const json& args, std::string& detail)
{
    const auto kind = args.at("resource").get<std::string>();
    const Event* anchor = ctx.deployed(args.at("from_deployed").get<std::string>(), false);
    if (anchor == nullptr) {
        detail = "anchor deployment never deployed";
        return false;
    }
    const std::int64_t from = anchor->t;
    const std::int64_t to = from + args.at("duration_s").get<std::int64_t>();
    const std::int64_t max_change = args.at("max_change").get<std::int64_t>();
    std::string summary;
    for (const auto& dep : deployment_list(args)) {
        std::optional<std::int64_t> before;
        std::int64_t lo = 0;
        std::int64_t hi = 0;
        bool any = false;
        for (const TraceRow* r : ctx.rows_of_deployment(dep)) {
            const auto v = limit_of(*r, kind);
            if (r->t <= from) {
                before = v;
                continue;
            }
            if (r->t > to) {
                break;
            }
            if (!any) {
                lo = hi = before.value_or(v);
                any = true;
            }
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (!any) {
            detail = dep + " has no samples in [" + std::to_string(from) + ", " + std::to_string(to) + "]";
            return false;
        }
        if (hi - lo > max_change) {
            detail = dep + " " + kind + " limit moved " + std::to_string(hi - lo) + " during the window";
            return false;
        }
        summary += dep + ":" + std::to_string(hi - lo) + " ";
    }
    detail = summary + "within [" + std::to_string(from) + ", " + std::to_string(to) + "]";
    return true;
}

bool check_limit_never_above(const Context& ctx, const json& args, std::string& detail)
{
    const auto kind = args.at("resource").get<std::string>();
    const auto max = args.at("max").get<std::int64_t>();
    std::size_t checked = 0;
    for (const auto& dep : deployment_list(args)) {
        for (const TraceRow* r : ctx.rows_of_deployment(dep)) {
            ++checked;
            if (limit_of(*r, kind) > max) {
                detail = dep + " " + kind + " limit " + std::to_string(limit_of(*r, kind)) + " at t=" +
                         std::to_string(r->t);
                return false;
            }
        }
    }
    detail = std::to_string(checked) + " samples at or below " + std::to_string(max);
    return checked > 0;
}

bool check_throttle_recurring(const Context& ctx, const json& args, std::string& detail)
{
    const auto after = args.at("after_t").get<std::int64_t>();
    const auto min_windows = args.at("min_windows").get<std::int64_t>();
    std::int64_t n = 0;
    for (const auto& dep : deployment_list(args)) {
        for (const TraceRow* r : ctx.rows_of_deployment(dep)) {
            if (r->t > after && r->cpu_throttle > 0.0) {
                ++n;
            }
        }
    }
    detail = std::to_string(n) + " throttled windows after t=" + std::to_string(after);
    return n >= min_windows;
}

bool check_analysis_requests(const Context& ctx, const json& args, std::string& detail)
{
    const auto wanted = args.at("equals").get<std::int64_t>();
    std::map<std::string, std::int64_t> per;
    for (const auto& r : ctx.config.requests) {
        per[r.id.str()] = 0;
    }
    for (const auto& [device, trace] : ctx.report.bus_traces) {
        for (const auto& e : trace) {
            if (e.action == Action::deployment_analysis_request && !e.deployment_id.empty()) {
                per[e.deployment_id] += 1;
            }
        }
    }
    std::string summary;
    bool ok = true;
    for (const auto& [dep, n] : per) {
        summary += dep + ":" + std::to_string(n) + " ";
        ok = ok && n == wanted;
    }
    detail = summary;
    return ok;
}

} // namespace

std::vector<ExpectationResult> evaluate_expectations(const ScenarioConfig& config, const RunReport& report)
{
    using Check = bool (*)(const Context&, const json&, std::string&);
    static const std::map<std::string, Check> checks{
        {"sequence", check_sequence},
        {"count", check_count},
        {"final_state", check_final_state},
        {"limit_range_after", check_limit_range_after},
        {"throttle_below_after", check_throttle_below_after},
        {"backlog_not_growing_after", check_backlog_not_growing_after},
        {"initial_throttle", check_initial_throttle},
        {"limit_stable_during", check_limit_stable_during},
        {"limit_never_above", check_limit_never_above},
        {"throttle_recurring", check_throttle_recurring},
        {"analysis_requests_per_deployment", check_analysis_requests},
    };
    const Context ctx{config, report};
    std::vector<ExpectationResult> out;
    for (const auto& e : config.expectations) {
        ExpectationResult r{e.name, e.kind, false, {}};
        auto it = checks.find(e.kind);
        if (it == checks.end()) {
            r.detail = "unknown expectation kind '" + e.kind + "'";
        } else {
            try {
                r.passed = it->second(ctx, e.args, r.detail);
            } catch (const std::exception& ex) {
                r.detail = std::string("malformed expectation: ") + ex.what();
            }
        }
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace orchestrion
