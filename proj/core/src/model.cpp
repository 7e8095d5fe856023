#include "orchestrion/model.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

namespace orchestrion {

std::string_view to_string(ResourceKind kind)
{
    switch (kind) {
    case ResourceKind::cpu:
        return "cpu";
    case ResourceKind::mem:
        return "mem";
    }
    return "?";
}

ResourceKind parse_resource_kind(std::string_view text)
{
    if (text == "cpu") {
        return ResourceKind::cpu;
    }
    if (text == "mem" || text == "memory") {
        return ResourceKind::mem;
    }
    throw ContractViolation("unknown resource kind '" + std::string(text) + "'");
}

ResourceAmount::ResourceAmount(std::int64_t value) : value_(value)
{
    if (value < 0) {
        throw ContractViolation("resource amount must be non-negative, got " + std::to_string(value));
    }
}

ResourceAmount ResourceAmount::operator+(ResourceAmount other) const
{
    if (value_ > std::numeric_limits<std::int64_t>::max() - other.value_) {
        throw ContractViolation("resource amount overflow");
    }
    return ResourceAmount{value_ + other.value_};
}

ResourceAmount ResourceAmount::operator-(ResourceAmount other) const
{
    if (other.value_ > value_) {
        throw ContractViolation("resource amount underflow: " + std::to_string(value_) + " - " +
                                std::to_string(other.value_));
    }
    return ResourceAmount{value_ - other.value_};
}

LimitDelta delta_limit(const LimitSet& target, const LimitSet& current)
{
    if (!target.same_kinds(current)) {
        throw ContractViolation("delta_limit: target and current cover different resource kinds");
    }
    LimitDelta out;
    for (auto kind : kResourceKinds) {
        if (target.has(kind)) {
            out.set(kind, target[kind].value() - current[kind].value());
        }
    }
    return out;
}

ResourceAmount clamp(ResourceAmount value, ResourceAmount lo, ResourceAmount hi)
{
    if (lo > hi) {
        throw ContractViolation("clamp: lo (" + std::to_string(lo.value()) + ") > hi (" +
                                std::to_string(hi.value()) + ")");
    }
    if (value < lo) {
        return lo;
    }
    if (value > hi) {
        return hi;
    }
    return value;
}

std::string describe(const LimitSet& limits)
{
    std::ostringstream out;
    out << '{';
    bool first = true;
    for (auto kind : kResourceKinds) {
        if (!limits.has(kind)) {
            continue;
        }
        if (!first) {
            out << ',';
        }
        first = false;
        out << to_string(kind) << ':' << limits[kind].value() << (kind == ResourceKind::cpu ? "m" : "MB");
    }
    out << '}';
    return out.str();
}

void OptimizationPolicy::validate() const
{
    if (!(buffer_cpu > 1.0)) {
        throw ConfigError("policy: buffer_cpu must be > 1");
    }
    if (!(mem_margin >= 1.0)) {
        throw ConfigError("policy: mem_margin must be >= 1");
    }
    if (throttle_limit < 0.0 || throttle_limit > 100.0) {
        throw ConfigError("policy: throttle_limit must lie in [0, 100]");
    }
    if (mem_max && mem_min > *mem_max) {
        throw ConfigError("policy: mem_min must not exceed mem_max");
    }
    for (auto kind : kResourceKinds) {
        if (scale_up[kind].value() <= 0 || scale_down[kind].value() <= 0) {
            throw ConfigError("policy: scale amounts must be > 0");
        }
    }
    if (optimization_interval_s <= 0) {
        throw ConfigError("policy: optimization_interval_s must be > 0");
    }
    if (warmup_s < 0) {
        throw ConfigError("policy: warmup_s must be >= 0");
    }
    for (auto kind : kResourceKinds) {
        if (defaults.base[kind] > defaults.request[kind]) {
            throw ConfigError("policy: default base limit exceeds default request limit");
        }
    }
}

ResourceAmount OptimizationPolicy::effective_mem_max(ResourceAmount host_mem_total) const
{
    if (mem_max) {
        return *mem_max;
    }
    return std::max(mem_min, ResourceAmount{host_mem_total.value() / 2});
}

void to_json(nlohmann::json& j, const LimitSet& limits)
{
    j = nlohmann::json::object();
    for (auto kind : kResourceKinds) {
        if (limits.has(kind)) {
            j[std::string(to_string(kind))] = limits[kind].value();
        }
    }
}

void from_json(const nlohmann::json& j, LimitSet& limits)
{
    limits = LimitSet{};
    for (auto kind : kResourceKinds) {
        const auto key = std::string(to_string(kind));
        if (j.contains(key)) {
            limits.set(kind, ResourceAmount{j.at(key).get<std::int64_t>()});
        }
    }
}

void to_json(nlohmann::json& j, const OptimizationPolicy& p)
{
    j = nlohmann::json{
        {"scale_up_cpu", p.scale_up[ResourceKind::cpu].value()},
        {"scale_up_mem", p.scale_up[ResourceKind::mem].value()},
        {"scale_down_cpu", p.scale_down[ResourceKind::cpu].value()},
        {"scale_down_mem", p.scale_down[ResourceKind::mem].value()},
        {"buffer_cpu", p.buffer_cpu},
        {"mem_margin", p.mem_margin},
        {"throttle_limit", p.throttle_limit},
        {"mem_min", p.mem_min.value()},
        {"cpu_min", p.cpu_min.value()},
        {"optimization_interval_s", p.optimization_interval_s},
        {"warmup_s", p.warmup_s},
        {"reserve_cpu", p.reserve[ResourceKind::cpu].value()},
        {"reserve_mem", p.reserve[ResourceKind::mem].value()},
        {"default_request", p.defaults.request},
        {"default_base", p.defaults.base},
    };
    if (p.mem_max) {
        j["mem_max"] = p.mem_max->value();
    }
}

namespace {

void read_amount(const nlohmann::json& j, const char* key, ResourceAmount& out)
{
    if (j.contains(key)) {
        out = ResourceAmount{j.at(key).get<std::int64_t>()};
    }
}

void read_per_resource(const nlohmann::json& j, const char* cpu_key, const char* mem_key,
                       PerResource<ResourceAmount>& out)
{
    ResourceAmount cpu = out[ResourceKind::cpu];
    ResourceAmount mem = out[ResourceKind::mem];
    read_amount(j, cpu_key, cpu);
    read_amount(j, mem_key, mem);
    out = PerResource<ResourceAmount>{cpu, mem};
}

void merge_limits(const nlohmann::json& j, const char* key, LimitSet& out)
{
    if (!j.contains(key)) {
        return;
    }
    LimitSet parsed = j.at(key).get<LimitSet>();
    for (auto kind : kResourceKinds) {
        if (parsed.has(kind)) {
            out.set(kind, parsed[kind]);
        }
    }
}

} // namespace

void from_json(const nlohmann::json& j, OptimizationPolicy& p)
{
    try {
        read_per_resource(j, "scale_up_cpu", "scale_up_mem", p.scale_up);
        read_per_resource(j, "scale_down_cpu", "scale_down_mem", p.scale_down);
        read_per_resource(j, "reserve_cpu", "reserve_mem", p.reserve);
        p.buffer_cpu = j.value("buffer_cpu", p.buffer_cpu);
        p.mem_margin = j.value("mem_margin", p.mem_margin);
        p.throttle_limit = j.value("throttle_limit", p.throttle_limit);
        read_amount(j, "mem_min", p.mem_min);
        read_amount(j, "cpu_min", p.cpu_min);
        if (j.contains("mem_max") && !j.at("mem_max").is_null()) {
            p.mem_max = ResourceAmount{j.at("mem_max").get<std::int64_t>()};
        }
        p.optimization_interval_s = j.value("optimization_interval_s", p.optimization_interval_s);
        p.warmup_s = j.value("warmup_s", p.warmup_s);
        merge_limits(j, "default_request", p.defaults.request);
        merge_limits(j, "default_base", p.defaults.base);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("policy: ") + e.what());
    } catch (const ContractViolation& e) {
        throw ConfigError(std::string("policy: ") + e.what());
    }
    p.validate();
}

DeviceId::DeviceId(std::string_view dotted) : text_(dotted)
{
    std::uint32_t value = 0;
    int parts = 0;
    const char* cur = dotted.data();
    const char* end = dotted.data() + dotted.size();
    while (cur < end || parts == 0) {
        unsigned octet = 0;
        auto [next, ec] = std::from_chars(cur, end, octet);
        if (ec != std::errc{} || octet > 255 || next == cur) {
            throw ContractViolation("invalid device address '" + std::string(dotted) + "'");
        }
        value = (value << 8) | octet;
        ++parts;
        cur = next;
        if (cur == end) {
            break;
        }
        if (*cur != '.') {
            throw ContractViolation("invalid device address '" + std::string(dotted) + "'");
        }
        ++cur;
    }
    if (parts != 4) {
        throw ContractViolation("device address must be a dotted quad: '" + std::string(dotted) + "'");
    }
    numeric_ = value;
}

} // namespace orchestrion
