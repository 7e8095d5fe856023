#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "orchestrion/metrics.hpp"
#include "orchestrion/model.hpp"

namespace orchestrion {

using Bytes = std::vector<std::uint8_t>;

/// Lowercase hex SHA-256 digest.
struct ContentHash {
    std::string hex;

    auto operator<=>(const ContentHash&) const = default;
};

inline constexpr std::string_view kHashAlgorithm = "sha256";

ContentHash content_hash(std::span<const std::uint8_t> bytes);
Bytes to_bytes(std::string_view text);

/// Image content: an ordered list of layers, each stored under its own hash.
struct ImageBlob {
    std::vector<Bytes> layers;

    bool operator==(const ImageBlob&) const = default;
};

/// Ledger entry for one (owner, imageName) key.
struct ImageRecord {
    ContentHash image_hash;
    ImageName image_name;
    OwnerId owner;
    std::int64_t base_limit_memory = 0;
    std::int64_t request_limit_memory = 0;
    std::int64_t base_limit_cpu = 0;
    std::int64_t request_limit_cpu = 0;
    /// Ledger sequence number of the write that produced this record.
    std::uint64_t revision = 0;

    [[nodiscard]] LimitSet request() const { return make_limits(request_limit_cpu, request_limit_memory); }
    [[nodiscard]] LimitSet base() const { return make_limits(base_limit_cpu, base_limit_memory); }
};

/// Content-addressed blob store. In-memory by default; mirrors to `root/<hash>` when given a directory.
class ContentStore {
public:
    ContentStore() = default;
    explicit ContentStore(std::filesystem::path root);

    ContentHash put(std::span<const std::uint8_t> bytes);
    /// Verifies the digest before returning. Throws NotFoundError / TamperError.
    [[nodiscard]] Bytes get(const ContentHash& hash) const;
    [[nodiscard]] bool contains(const ContentHash& hash) const;
    [[nodiscard]] std::size_t size() const;

private:
    std::optional<std::filesystem::path> root_;
    std::map<std::string, Bytes> blobs_;
};

/// Simulated decentralized registry: content store plus an append-only ownership ledger.
///
/// Reads may run concurrently; writes are serialized. With a root directory, the layout is
///   root/store/ALGORITHM   "sha256\n"
///   root/store/<hex>       raw blob bytes
///   root/ledger.jsonl      one compact JSON record per line, append-only
/// and an existing root is replayed on construction.
class Registry {
public:
    Registry();
    explicit Registry(std::filesystem::path root);

    /// Creates or updates (owner, name). `caller` must be `owner`, and an existing entry's owner never
    /// changes. Throws OwnershipError, ContractViolation (empty blob, base > request).
    ContentHash publish_image(const OwnerId& caller, const OwnerId& owner, const ImageName& name,
                              const ImageBlob& blob, const LimitSet& request, const LimitSet& base);

    [[nodiscard]] ImageRecord get_image(const OwnerId& owner, const ImageName& name) const;
    /// Manifest lookup plus per-layer digest checks.
    [[nodiscard]] ImageBlob fetch_blob(const ContentHash& hash) const;
    [[nodiscard]] Bytes fetch_layer(const ContentHash& hash) const;

    ContentHash archive_metrics(const DeviceId& device, const MetricsSeries& series);
    [[nodiscard]] std::vector<ContentHash> archived_metrics(const DeviceId& device) const;
    [[nodiscard]] MetricsSeries fetch_metrics(const ContentHash& hash) const;

    /// Full update history for a key, oldest first.
    [[nodiscard]] std::vector<ImageRecord> history(const OwnerId& owner, const ImageName& name) const;
    [[nodiscard]] std::size_t ledger_size() const;

private:
    void append_ledger_locked(nlohmann::json record);
    void apply_locked(const nlohmann::json& record);
    void replay();

    std::optional<std::filesystem::path> root_;
    mutable std::shared_mutex mutex_;
    ContentStore store_;
    std::vector<nlohmann::json> ledger_;
    std::map<std::pair<std::string, std::string>, std::vector<ImageRecord>> images_;
    std::map<std::string, std::vector<ContentHash>> metrics_;
};

} // namespace orchestrion
