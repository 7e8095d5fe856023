#include "orchestrion/hostsim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

namespace orchestrion {

std::string_view to_string(WorkloadClass cls)
{
    return cls == WorkloadClass::cpu_dominant ? "cpu" : "mem";
}

WorkloadClass parse_workload_class(std::string_view text)
{
    if (text == "cpu" || text == "cpu_dominant") {
        return WorkloadClass::cpu_dominant;
    }
    if (text == "mem" || text == "memory" || text == "mem_dominant") {
        return WorkloadClass::mem_dominant;
    }
    throw ConfigError("unknown workload class '" + std::string(text) + "'");
}

ResourceKind dominant_kind(WorkloadClass cls) noexcept
{
    return cls == WorkloadClass::cpu_dominant ? ResourceKind::cpu : ResourceKind::mem;
}

std::int64_t default_peak(int pattern, WorkloadClass cls)
{
    static constexpr std::array<std::int64_t, kPatternCount> kMem{95, 95, 95, 80, 95};
    static constexpr std::array<std::int64_t, kPatternCount> kCpu{150, 150, 150, 120, 140};
    if (pattern < 1 || pattern > kPatternCount) {
        throw ContractViolation("workload pattern must be 1.." + std::to_string(kPatternCount));
    }
    const auto idx = static_cast<std::size_t>(pattern - 1);
    return cls == WorkloadClass::mem_dominant ? kMem[idx] : kCpu[idx];
}

void WorkloadSpec::validate() const
{
    if (pattern < 1 || pattern > kPatternCount) {
        throw ConfigError("workload pattern must be 1.." + std::to_string(kPatternCount));
    }
    if (period_s <= 0 || period_s % kPatternSegments != 0) {
        throw ConfigError("workload period must be a positive multiple of " + std::to_string(kPatternSegments));
    }
    if (peak <= 0 || secondary < 0) {
        throw ConfigError("workload peak must be > 0 and secondary demand >= 0");
    }
}

WorkloadSpec make_workload(int pattern, WorkloadClass cls, std::int64_t period_s, std::uint64_t seed)
{
    WorkloadSpec spec;
    spec.pattern = pattern;
    spec.cls = cls;
    spec.period_s = period_s;
    spec.peak = default_peak(pattern, cls);
    spec.secondary = cls == WorkloadClass::mem_dominant ? 10 : 16;
    spec.seed = seed;
    spec.validate();
    return spec;
}

void to_json(nlohmann::json& j, const WorkloadSpec& spec)
{
    j = nlohmann::json{
        {"pattern", spec.pattern},
        {"class", std::string(to_string(spec.cls))},
        {"period_s", spec.period_s},
        {"peak", spec.peak},
        {"secondary", spec.secondary},
        {"seed", spec.seed},
    };
}

void from_json(const nlohmann::json& j, WorkloadSpec& spec)
{
    const int pattern = j.at("pattern").get<int>();
    const WorkloadClass cls = parse_workload_class(j.at("class").get<std::string>());
    if (pattern < 1 || pattern > kPatternCount) {
        throw ConfigError("workload pattern must be 1.." + std::to_string(kPatternCount));
    }
    spec = WorkloadSpec{};
    spec.pattern = pattern;
    spec.cls = cls;
    spec.period_s = j.value("period_s", std::int64_t{60});
    spec.peak = j.value("peak", default_peak(pattern, cls));
    spec.secondary = j.value("secondary", std::int64_t{cls == WorkloadClass::mem_dominant ? 10 : 16});
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.validate();
}

std::array<double, kPatternSegments> pattern_fractions(int pattern, std::uint64_t seed)
{
    switch (pattern) {
    case 1: // slow ramp up and down
        return {0.20, 0.45, 0.70, 1.00, 0.70, 0.45};
    case 2: // step jumps
        return {0.20, 0.20, 1.00, 1.00, 0.20, 0.20};
    case 3: // on-off
        return {1.00, 1.00, 1.00, 0.10, 0.10, 0.10};
    case 4: { // small-amplitude noise just under the peak
        std::mt19937_64 rng(seed);
        std::array<double, kPatternSegments> out{};
        for (auto& f : out) {
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            f = 1.0 - 0.1 * u;
        }
        *std::max_element(out.begin(), out.end()) = 1.0;
        return out;
    }
    case 5: // diurnal-like
        return {0.55, 0.75, 1.00, 0.85, 0.65, 0.45};
    default:
        throw ContractViolation("workload pattern must be 1.." + std::to_string(kPatternCount));
    }
}

std::int64_t workload(const WorkloadSpec& spec, std::int64_t t)
{
    if (t < 0) {
        throw ContractViolation("workload: t must be >= 0");
    }
    const auto fractions = pattern_fractions(spec.pattern, spec.seed);
    const std::int64_t phase = t % spec.period_s;
    const auto segment = static_cast<std::size_t>(phase * kPatternSegments / spec.period_s);
    return std::llround(fractions[segment] * static_cast<double>(spec.peak));
}

LimitSet workload_demand(const WorkloadSpec& spec, std::int64_t t)
{
    const std::int64_t main = workload(spec, t);
    return spec.cls == WorkloadClass::cpu_dominant ? make_limits(main, spec.secondary)
                                                   : make_limits(spec.secondary, main);
}

LimitSet HostConfig::capacity() const
{
    return LimitSet{total[ResourceKind::cpu] - preoccupied[ResourceKind::cpu],
                    total[ResourceKind::mem] - preoccupied[ResourceKind::mem]};
}

void HostConfig::validate() const
{
    for (auto kind : kResourceKinds) {
        if (!total.has(kind) || !preoccupied.has(kind)) {
            throw ConfigError("host: total and preoccupied must cover cpu and mem");
        }
        if (preoccupied[kind] > total[kind]) {
            throw ConfigError("host: preoccupied " + std::string(to_string(kind)) + " exceeds total");
        }
    }
    if (tick_s <= 0) {
        throw ConfigError("host: tick_s must be > 0");
    }
}

std::string_view to_string(HostEventKind kind)
{
    return kind == HostEventKind::oom_kill ? "oom_kill" : "stopped";
}

Host::Host(HostConfig config) : config_(std::move(config))
{
    config_.validate();
}

ContainerId Host::run_container(const ContainerId& id, const WorkloadSpec& spec, const LimitSet& limits,
                                int restart_count)
{
    spec.validate();
    for (auto kind : kResourceKinds) {
        if (!limits.has(kind) || limits[kind].value() == 0) {
            throw ContractViolation("run_container: limits must be non-zero for cpu and mem");
        }
    }
    if (auto it = containers_.find(id); it != containers_.end() && it->second.status == ContainerStatus::running) {
        throw ContractViolation("run_container: '" + id.str() + "' is already running");
    }
    ContainerState state;
    state.id = id;
    state.spec = spec;
    state.limits = limits;
    state.started_at = now_;
    state.order = next_order_++;
    state.restart_count = restart_count;
    containers_.insert_or_assign(id, std::move(state));
    return id;
}

ContainerId Host::run_container(const WorkloadSpec& spec, const LimitSet& limits)
{
    return run_container(ContainerId{"c" + std::to_string(++next_auto_id_)}, spec, limits);
}

ContainerState& Host::find_running(const ContainerId& id)
{
    auto it = containers_.find(id);
    if (it == containers_.end() || it->second.status != ContainerStatus::running) {
        throw NotFoundError("container '" + id.str() + "' is not running");
    }
    return it->second;
}

void Host::update_limits(const ContainerId& id, const LimitSet& limits)
{
    ContainerState& c = find_running(id);
    for (auto kind : kResourceKinds) {
        if (limits.has(kind)) {
            if (limits[kind].value() == 0) {
                throw ContractViolation("update_limits: limits must be non-zero");
            }
            c.limits.set(kind, limits[kind]);
        }
    }
}

void Host::stop(const ContainerId& id)
{
    find_running(id).status = ContainerStatus::stopped;
}

void Host::kill(ContainerState& c, std::int64_t demand, bool host_pressure, std::vector<HostEvent>& events)
{
    c.status = ContainerStatus::killed_oom;
    events.push_back(HostEvent{now_, c.id, HostEventKind::oom_kill, demand, c.limits[ResourceKind::mem].value(),
                               host_pressure});
}

std::vector<HostEvent> Host::tick()
{
    std::vector<HostEvent> events;
    const LimitSet cap = config_.capacity();

    std::vector<ContainerState*> live;
    for (auto& [id, c] : containers_) {
        if (c.status == ContainerStatus::running) {
            live.push_back(&c);
        }
    }
    std::sort(live.begin(), live.end(), [](auto* a, auto* b) { return a->order < b->order; });

    // Memory first: a container that cannot hold its working set does no work this tick.
    std::vector<std::int64_t> mem_use(live.size(), 0);
    for (std::size_t i = 0; i < live.size(); ++i) {
        ContainerState& c = *live[i];
        const std::int64_t demand = workload_demand(c.spec, now_ - c.started_at)[ResourceKind::mem].value();
        const std::int64_t limit = c.limits[ResourceKind::mem].value();
        c.window.ticks += 1;
        if (demand > limit) {
            c.window.mem_peak = std::max(c.window.mem_peak, limit);
            kill(c, demand, false, events);
        } else {
            mem_use[i] = demand;
        }
    }
    std::int64_t mem_total = std::accumulate(mem_use.begin(), mem_use.end(), std::int64_t{0});
    for (std::size_t i = live.size(); i-- > 0 && mem_total > cap[ResourceKind::mem].value();) {
        if (live[i]->status == ContainerStatus::running) {
            mem_total -= mem_use[i];
            kill(*live[i], mem_use[i], true, events);
            mem_use[i] = 0;
        }
    }
    for (std::size_t i = 0; i < live.size(); ++i) {
        live[i]->window.mem_peak = std::max(live[i]->window.mem_peak, mem_use[i]);
    }

    // CPU: max-min fair share of capacity, each container capped by min(demand, limit).
    struct Want {
        ContainerState* c;
        double pattern;
        double demand;
        double want;
    };
    std::vector<Want> wants;
    for (ContainerState* c : live) {
        if (c->status != ContainerStatus::running) {
            continue;
        }
        const double pattern =
            static_cast<double>(workload_demand(c->spec, now_ - c->started_at)[ResourceKind::cpu].value());
        const double demand = pattern + c->backlog;
        const double want = std::min(demand, static_cast<double>(c->limits[ResourceKind::cpu].value()));
        wants.push_back(Want{c, pattern, demand, want});
    }
    std::vector<std::size_t> by_want(wants.size());
    std::iota(by_want.begin(), by_want.end(), std::size_t{0});
    std::stable_sort(by_want.begin(), by_want.end(),
                     [&](std::size_t a, std::size_t b) { return wants[a].want < wants[b].want; });
    double remaining = static_cast<double>(cap[ResourceKind::cpu].value());
    std::vector<double> granted(wants.size(), 0.0);
    for (std::size_t k = 0; k < by_want.size(); ++k) {
        const std::size_t i = by_want[k];
        const double share = remaining / static_cast<double>(by_want.size() - k);
        granted[i] = std::min(wants[i].want, share);
        remaining -= granted[i];
    }
    for (std::size_t i = 0; i < wants.size(); ++i) {
        ContainerState& c = *wants[i].c;
        const double g = granted[i];
        if (wants[i].demand > g + 1e-9) {
            c.window.throttled += 1;
        }
        c.window.granted_sum += g;
        c.backlog = std::max(0.0, wants[i].demand - g);
        c.total_demanded += wants[i].pattern;
        c.total_granted += g;
    }

    now_ += config_.tick_s;
    return events;
}

MetricsSample Host::sample_metrics()
{
    MetricsSample sample;
    sample.timestamp = now_;
    const LimitSet cap = config_.capacity();
    double cpu_used = 0.0;
    double mem_used = 0.0;
    std::int64_t cpu_limits = 0;
    std::int64_t mem_limits = 0;

    std::vector<ContainerState*> ordered;
    for (auto& [id, c] : containers_) {
        ordered.push_back(&c);
    }
    std::sort(ordered.begin(), ordered.end(), [](auto* a, auto* b) { return a->order < b->order; });

    for (ContainerState* c : ordered) {
        auto& w = c->window;
        if (w.ticks == 0) {
            continue;
        }
        ContainerSample cs;
        cs.id = c->id;
        cs.cpu_util = w.granted_sum / static_cast<double>(w.ticks);
        cs.mem_util = static_cast<double>(w.mem_peak);
        cs.throttle_pct = 100.0 * static_cast<double>(w.throttled) / static_cast<double>(w.ticks);
        cs.limits = c->limits;
        cs.status = c->status;
        sample.containers.push_back(cs);
        if (c->status == ContainerStatus::running) {
            cpu_used += cs.cpu_util;
            mem_used += cs.mem_util;
            cpu_limits += c->limits[ResourceKind::cpu].value();
            mem_limits += c->limits[ResourceKind::mem].value();
        }
        w = ContainerState::Window{};
    }

    sample.total = PerResource<double>{static_cast<double>(cap[ResourceKind::cpu].value()),
                                       static_cast<double>(cap[ResourceKind::mem].value())};
    sample.avail = PerResource<double>{sample.total[ResourceKind::cpu] - cpu_used,
                                       sample.total[ResourceKind::mem] - mem_used};
    sample.allocatable = PerResource<std::int64_t>{cap[ResourceKind::cpu].value() - cpu_limits,
                                                   cap[ResourceKind::mem].value() - mem_limits};
    return sample;
}

const ContainerState& Host::container(const ContainerId& id) const
{
    auto it = containers_.find(id);
    if (it == containers_.end()) {
        throw NotFoundError("unknown container '" + id.str() + "'");
    }
    return it->second;
}

bool Host::is_running(const ContainerId& id) const
{
    auto it = containers_.find(id);
    return it != containers_.end() && it->second.status == ContainerStatus::running;
}

std::vector<ContainerId> Host::running() const
{
    std::vector<const ContainerState*> live;
    for (const auto& [id, c] : containers_) {
        if (c.status == ContainerStatus::running) {
            live.push_back(&c);
        }
    }
    std::sort(live.begin(), live.end(), [](auto* a, auto* b) { return a->order < b->order; });
    std::vector<ContainerId> out;
    for (const auto* c : live) {
        out.push_back(c->id);
    }
    return out;
}

PerResource<std::int64_t> Host::allocatable() const
{
    const LimitSet cap = config_.capacity();
    std::int64_t cpu = cap[ResourceKind::cpu].value();
    std::int64_t mem = cap[ResourceKind::mem].value();
    for (const auto& [id, c] : containers_) {
        if (c.status == ContainerStatus::running) {
            cpu -= c.limits[ResourceKind::cpu].value();
            mem -= c.limits[ResourceKind::mem].value();
        }
    }
    return PerResource<std::int64_t>{cpu, mem};
}

} // namespace orchestrion
