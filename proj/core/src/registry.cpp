#include "orchestrion/registry.hpp"

#include <array>
#include <fstream>
#include <iterator>
#include <mutex>

#include <openssl/evp.h>

namespace orchestrion {

namespace fs = std::filesystem;

ContentHash content_hash(std::span<const std::uint8_t> bytes)
{
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int length = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 digest failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string hex;
    hex.reserve(length * 2);
    for (unsigned int i = 0; i < length; ++i) {
        hex.push_back(kHex[digest[i] >> 4]);
        hex.push_back(kHex[digest[i] & 0x0f]);
    }
    return ContentHash{std::move(hex)};
}

Bytes to_bytes(std::string_view text) { return Bytes(text.begin(), text.end()); }

namespace {

bool valid_hex_digest(const std::string& hex)
{
    if (hex.size() != 64) {
        return false;
    }
    for (char c : hex) {
        if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) {
            return false;
        }
    }
    return true;
}

Bytes read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw NotFoundError("cannot open " + path.string());
    }
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

} // namespace

ContentStore::ContentStore(fs::path root) : root_(std::move(root))
{
    fs::create_directories(*root_);
    const auto header = *root_ / "ALGORITHM";
    if (fs::exists(header)) {
        const auto bytes = read_file(header);
        const std::string algo(bytes.begin(), bytes.end());
        if (algo != std::string(kHashAlgorithm) + "\n") {
            throw ConfigError("content store at " + root_->string() + " uses unsupported hash '" + algo + "'");
        }
    } else {
        std::ofstream out(header, std::ios::binary);
        out << kHashAlgorithm << '\n';
    }
}

ContentHash ContentStore::put(std::span<const std::uint8_t> bytes)
{
    ContentHash hash = content_hash(bytes);
    if (root_) {
        const auto path = *root_ / hash.hex;
        if (!fs::exists(path)) {
            const auto tmp = *root_ / (hash.hex + ".tmp");
            {
                std::ofstream out(tmp, std::ios::binary);
                out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
                if (!out) {
                    throw std::runtime_error("content store: write failed for " + tmp.string());
                }
            }
            fs::rename(tmp, path);
        }
    } else {
        blobs_.try_emplace(hash.hex, bytes.begin(), bytes.end());
    }
    return hash;
}

Bytes ContentStore::get(const ContentHash& hash) const
{
    if (!valid_hex_digest(hash.hex)) {
        throw NotFoundError("not a content hash: '" + hash.hex + "'");
    }
    Bytes bytes;
    if (root_) {
        const auto path = *root_ / hash.hex;
        if (!fs::exists(path)) {
            throw NotFoundError("blob " + hash.hex + " not found");
        }
        bytes = read_file(path);
    } else {
        auto it = blobs_.find(hash.hex);
        if (it == blobs_.end()) {
            throw NotFoundError("blob " + hash.hex + " not found");
        }
        bytes = it->second;
    }
    if (content_hash(bytes) != hash) {
        throw TamperError("blob " + hash.hex + " does not match its digest");
    }
    return bytes;
}

bool ContentStore::contains(const ContentHash& hash) const
{
    if (!valid_hex_digest(hash.hex)) {
        return false;
    }
    if (root_) {
        return fs::exists(*root_ / hash.hex);
    }
    return blobs_.contains(hash.hex);
}

std::size_t ContentStore::size() const
{
    if (!root_) {
        return blobs_.size();
    }
    std::size_t n = 0;
    for (const auto& entry : fs::directory_iterator(*root_)) {
        if (valid_hex_digest(entry.path().filename().string())) {
            ++n;
        }
    }
    return n;
}

Registry::Registry() = default;

Registry::Registry(fs::path root) : root_(root), store_(root / "store")
{
    replay();
}

void Registry::replay()
{
    const auto path = *root_ / "ledger.jsonl";
    if (!fs::exists(path)) {
        return;
    }
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        auto record = nlohmann::json::parse(line);
        apply_locked(record);
        ledger_.push_back(std::move(record));
    }
}

void Registry::append_ledger_locked(nlohmann::json record)
{
    record["seq"] = ledger_.size() + 1;
    if (root_) {
        std::ofstream out(*root_ / "ledger.jsonl", std::ios::app);
        out << record.dump() << '\n';
        if (!out) {
            throw std::runtime_error("registry: ledger append failed");
        }
    }
    apply_locked(record);
    ledger_.push_back(std::move(record));
}

void Registry::apply_locked(const nlohmann::json& record)
{
    const auto kind = record.at("kind").get<std::string>();
    if (kind == "image") {
        ImageRecord rec;
        rec.image_hash = ContentHash{record.at("imageHash").get<std::string>()};
        rec.image_name = ImageName{record.at("imageName").get<std::string>()};
        rec.owner = OwnerId{record.at("owner").get<std::string>()};
        rec.base_limit_memory = record.at("baseLimitMemory").get<std::int64_t>();
        rec.request_limit_memory = record.at("requestLimitMemory").get<std::int64_t>();
        rec.base_limit_cpu = record.at("baseLimitCPU").get<std::int64_t>();
        rec.request_limit_cpu = record.at("requestLimitCPU").get<std::int64_t>();
        rec.revision = record.at("seq").get<std::uint64_t>();
        images_[{rec.owner.str(), rec.image_name.str()}].push_back(std::move(rec));
    } else if (kind == "metrics") {
        metrics_[record.at("device").get<std::string>()].push_back(ContentHash{record.at("hash").get<std::string>()});
    }
}

ContentHash Registry::publish_image(const OwnerId& caller, const OwnerId& owner, const ImageName& name,
                                    const ImageBlob& blob, const LimitSet& request, const LimitSet& base)
{
    if (blob.layers.empty()) {
        throw ContractViolation("publish_image: blob has no layers");
    }
    for (auto kind : kResourceKinds) {
        if (base[kind] > request[kind]) {
            throw ContractViolation("publish_image: base " + std::string(to_string(kind)) +
                                    " limit exceeds request limit");
        }
    }

    std::unique_lock lock(mutex_);
    if (caller != owner) {
        throw OwnershipError("only '" + owner.str() + "' can publish or update " + owner.str() + "/" + name.str());
    }
    if (auto it = images_.find({owner.str(), name.str()}); it != images_.end() && it->second.back().owner != caller) {
        throw OwnershipError("image " + name.str() + " is owned by '" + it->second.back().owner.str() + "'");
    }

    nlohmann::json manifest{{"mediaType", "orchestrion.image.v1"}, {"layers", nlohmann::json::array()}};
    for (const auto& layer : blob.layers) {
        manifest["layers"].push_back(store_.put(layer).hex);
    }
    const ContentHash hash = store_.put(to_bytes(manifest.dump()));

    append_ledger_locked(nlohmann::json{
        {"kind", "image"},
        {"owner", owner.str()},
        {"imageName", name.str()},
        {"imageHash", hash.hex},
        {"baseLimitMemory", base[ResourceKind::mem].value()},
        {"requestLimitMemory", request[ResourceKind::mem].value()},
        {"baseLimitCPU", base[ResourceKind::cpu].value()},
        {"requestLimitCPU", request[ResourceKind::cpu].value()},
    });
    return hash;
}

ImageRecord Registry::get_image(const OwnerId& owner, const ImageName& name) const
{
    std::shared_lock lock(mutex_);
    auto it = images_.find({owner.str(), name.str()});
    if (it == images_.end()) {
        throw NotFoundError("no image " + owner.str() + "/" + name.str());
    }
    return it->second.back();
}

std::vector<ImageRecord> Registry::history(const OwnerId& owner, const ImageName& name) const
{
    std::shared_lock lock(mutex_);
    auto it = images_.find({owner.str(), name.str()});
    if (it == images_.end()) {
        return {};
    }
    return it->second;
}

ImageBlob Registry::fetch_blob(const ContentHash& hash) const
{
    std::shared_lock lock(mutex_);
    const Bytes manifest_bytes = store_.get(hash);
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(manifest_bytes.begin(), manifest_bytes.end());
    } catch (const nlohmann::json::exception&) {
        throw NotFoundError("blob " + hash.hex + " is not an image manifest");
    }
    if (!manifest.is_object() || !manifest.contains("layers")) {
        throw NotFoundError("blob " + hash.hex + " is not an image manifest");
    }
    ImageBlob blob;
    for (const auto& layer : manifest.at("layers")) {
        blob.layers.push_back(store_.get(ContentHash{layer.get<std::string>()}));
    }
    return blob;
}

Bytes Registry::fetch_layer(const ContentHash& hash) const
{
    std::shared_lock lock(mutex_);
    return store_.get(hash);
}

ContentHash Registry::archive_metrics(const DeviceId& device, const MetricsSeries& series)
{
    if (series.empty()) {
        throw ContractViolation("archive_metrics: series is empty");
    }
    std::unique_lock lock(mutex_);
    const ContentHash hash = store_.put(to_bytes(serialize(series)));
    append_ledger_locked(nlohmann::json{{"kind", "metrics"}, {"device", device.str()}, {"hash", hash.hex},
                                        {"key", series.key}});
    return hash;
}

std::vector<ContentHash> Registry::archived_metrics(const DeviceId& device) const
{
    std::shared_lock lock(mutex_);
    auto it = metrics_.find(device.str());
    return it == metrics_.end() ? std::vector<ContentHash>{} : it->second;
}

MetricsSeries Registry::fetch_metrics(const ContentHash& hash) const
{
    std::shared_lock lock(mutex_);
    const Bytes bytes = store_.get(hash);
    return deserialize_series(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::size_t Registry::ledger_size() const
{
    std::shared_lock lock(mutex_);
    return ledger_.size();
}

} // namespace orchestrion
