#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

#include "orchestrion/errors.hpp"

namespace orchestrion {

enum class ResourceKind : std::uint8_t { cpu = 0, mem = 1 };

inline constexpr std::array<ResourceKind, 2> kResourceKinds{ResourceKind::cpu, ResourceKind::mem};

std::string_view to_string(ResourceKind kind);
ResourceKind parse_resource_kind(std::string_view text);

/// Non-negative resource quantity: mCPU for cpu (1000 = one core), MB for mem.
class ResourceAmount {
public:
    constexpr ResourceAmount() = default;
    explicit ResourceAmount(std::int64_t value);

    [[nodiscard]] constexpr std::int64_t value() const noexcept { return value_; }

    /// Throws ContractViolation on overflow.
    ResourceAmount operator+(ResourceAmount other) const;
    /// Throws ContractViolation if the result would be negative.
    ResourceAmount operator-(ResourceAmount other) const;

    constexpr auto operator<=>(const ResourceAmount&) const = default;

private:
    std::int64_t value_ = 0;
};

/// Fixed-capacity map keyed by ResourceKind; a slot may be absent.
template <typename T>
class PerResource {
public:
    constexpr PerResource() = default;
    constexpr PerResource(T cpu, T mem) : slots_{cpu, mem} {}

    static PerResource only(ResourceKind kind, T value)
    {
        PerResource out;
        out.set(kind, value);
        return out;
    }

    [[nodiscard]] bool has(ResourceKind kind) const noexcept { return slots_[index(kind)].has_value(); }

    [[nodiscard]] const T& operator[](ResourceKind kind) const
    {
        const auto& slot = slots_[index(kind)];
        if (!slot) {
            throw ContractViolation("resource kind '" + std::string(to_string(kind)) + "' not present");
        }
        return *slot;
    }

    void set(ResourceKind kind, T value) { slots_[index(kind)] = value; }
    void erase(ResourceKind kind) { slots_[index(kind)].reset(); }

    [[nodiscard]] bool same_kinds(const PerResource& other) const noexcept
    {
        return has(ResourceKind::cpu) == other.has(ResourceKind::cpu) &&
               has(ResourceKind::mem) == other.has(ResourceKind::mem);
    }

    bool operator==(const PerResource&) const = default;

private:
    static constexpr std::size_t index(ResourceKind kind) noexcept { return static_cast<std::size_t>(kind); }
    std::array<std::optional<T>, 2> slots_{};
};

/// One role (request / base / current / target) worth of limits.
using LimitSet = PerResource<ResourceAmount>;
/// Signed per-resource difference between two limit sets.
using LimitDelta = PerResource<std::int64_t>;

inline LimitSet make_limits(std::int64_t cpu_mcpu, std::int64_t mem_mb)
{
    return LimitSet{ResourceAmount{cpu_mcpu}, ResourceAmount{mem_mb}};
}

/// target − current per kind. Both sets must carry the same kinds.
LimitDelta delta_limit(const LimitSet& target, const LimitSet& current);

/// Throws ContractViolation when lo > hi.
ResourceAmount clamp(ResourceAmount value, ResourceAmount lo, ResourceAmount hi);

std::string describe(const LimitSet& limits);

/// Vendor limits used when an image omits them.
struct DefaultLimits {
    LimitSet request = make_limits(200, 128);
    LimitSet base = make_limits(100, 64);
};

struct OptimizationPolicy {
    PerResource<ResourceAmount> scale_up{ResourceAmount{50}, ResourceAmount{20}};
    PerResource<ResourceAmount> scale_down{ResourceAmount{100}, ResourceAmount{20}};
    double buffer_cpu = 1.10;
    double mem_margin = 1.10;
    double throttle_limit = 25.0;
    ResourceAmount mem_min{32};
    /// Unset means half of the host's memory.
    std::optional<ResourceAmount> mem_max;
    ResourceAmount cpu_min{10};
    std::int64_t optimization_interval_s = 300;
    std::int64_t warmup_s = 300;
    PerResource<ResourceAmount> reserve{ResourceAmount{0}, ResourceAmount{0}};
    DefaultLimits defaults;

    /// Throws ConfigError listing the first broken invariant.
    void validate() const;
    [[nodiscard]] ResourceAmount effective_mem_max(ResourceAmount host_mem_total) const;
};

void to_json(nlohmann::json& j, const OptimizationPolicy& policy);
/// Missing keys keep their defaults.
void from_json(const nlohmann::json& j, OptimizationPolicy& policy);

void to_json(nlohmann::json& j, const LimitSet& limits);
void from_json(const nlohmann::json& j, LimitSet& limits);

/// IPv4 dotted-quad device address, ordered by numeric value.
class DeviceId {
public:
    DeviceId() = default;
    explicit DeviceId(std::string_view dotted);

    [[nodiscard]] const std::string& str() const noexcept { return text_; }
    [[nodiscard]] std::uint32_t numeric() const noexcept { return numeric_; }

    bool operator==(const DeviceId& other) const noexcept { return numeric_ == other.numeric_; }
    std::strong_ordering operator<=>(const DeviceId& other) const noexcept { return numeric_ <=> other.numeric_; }

private:
    std::string text_ = "0.0.0.0";
    std::uint32_t numeric_ = 0;
};

/// Opaque non-empty string identifier, distinct per Tag.
template <typename Tag>
class StrongId {
public:
    StrongId() = default;
    explicit StrongId(std::string value) : value_(std::move(value))
    {
        if (value_.empty()) {
            throw ContractViolation("identifier must not be empty");
        }
    }

    [[nodiscard]] const std::string& str() const noexcept { return value_; }
    [[nodiscard]] bool empty() const noexcept { return value_.empty(); }

    auto operator<=>(const StrongId&) const = default;

private:
    std::string value_;
};

using ContainerId = StrongId<struct ContainerIdTag>;
using OwnerId = StrongId<struct OwnerIdTag>;
using ImageName = StrongId<struct ImageNameTag>;
using DeploymentId = StrongId<struct DeploymentIdTag>;

} // namespace orchestrion
