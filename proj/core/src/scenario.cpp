#include "orchestrion/scenario.hpp"

#include <fstream>
#include <set>

namespace orchestrion {

std::uint64_t derive_seed(std::uint64_t seed, std::size_t index) noexcept
{
    // splitmix64 finalizer over (seed, index)
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void ScenarioConfig::validate() const
{
    if (name.empty()) {
        throw ConfigError("scenario: name is required");
    }
    if (devices.empty()) {
        throw ConfigError("scenario '" + name + "': at least one device is required");
    }
    if (duration_s <= 0) {
        throw ConfigError("scenario '" + name + "': duration_s must be > 0");
    }
    options.policy.validate();
    options.forecast.validate();
    options.monitor.validate();

    std::set<DeviceId> device_ids;
    for (const auto& d : devices) {
        d.host.validate();
        if (!device_ids.insert(d.id).second) {
            throw ConfigError("scenario '" + name + "': duplicate device " + d.id.str());
        }
    }
    std::set<std::pair<std::string, std::string>> image_keys;
    for (const auto& img : images) {
        img.workload.validate();
        for (auto kind : kResourceKinds) {
            if (!img.request.has(kind) || !img.base.has(kind)) {
                throw ConfigError("image " + img.name.str() + ": request and base must cover cpu and mem");
            }
            if (img.base[kind] > img.request[kind]) {
                throw ConfigError("image " + img.name.str() + ": base exceeds request for " + std::string(to_string(kind)));
            }
        }
        image_keys.insert({img.owner.str(), img.name.str()});
    }
    std::set<DeploymentId> request_ids;
    for (const auto& r : requests) {
        if (!request_ids.insert(r.id).second) {
            throw ConfigError("scenario '" + name + "': duplicate request id " + r.id.str());
        }
        if (!device_ids.contains(r.device)) {
            throw ConfigError("request " + r.id.str() + ": unknown device " + r.device.str());
        }
        if (!r.at && r.after_stable.empty()) {
            throw ConfigError("request " + r.id.str() + ": needs 'at' or 'after_stable'");
        }
        if (r.at && (*r.at < 0 || *r.at >= duration_s)) {
            throw ConfigError("request " + r.id.str() + ": 'at' must lie within the run duration");
        }
    }
    for (const auto& r : requests) {
        for (const auto& dep : r.after_stable) {
            if (!request_ids.contains(dep)) {
                throw ConfigError("request " + r.id.str() + ": after_stable names unknown request " + dep.str());
            }
        }
    }
    (void)image_keys;
}

namespace {

nlohmann::json host_json(const HostConfig& h)
{
    return nlohmann::json{{"total", h.total}, {"preoccupied", h.preoccupied}, {"tick_s", h.tick_s}};
}

LimitSet limits_with_defaults(const nlohmann::json& j, const char* key, const LimitSet& fallback)
{
    LimitSet out = fallback;
    if (j.contains(key)) {
        const LimitSet given = j.at(key).get<LimitSet>();
        for (auto kind : kResourceKinds) {
            if (given.has(kind)) {
                out.set(kind, given[kind]);
            }
        }
    }
    return out;
}

template <typename F>
auto with_context(const std::string& where, F&& f) -> decltype(f())
{
    try {
        return f();
    } catch (const ConfigError& e) {
        throw ConfigError(where + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(where + ": " + e.what());
    } catch (const ContractViolation& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

} // namespace

void to_json(nlohmann::json& j, const ScenarioConfig& s)
{
    nlohmann::json devices = nlohmann::json::array();
    for (const auto& d : s.devices) {
        auto dj = host_json(d.host);
        dj["id"] = d.id.str();
        devices.push_back(std::move(dj));
    }
    nlohmann::json images = nlohmann::json::array();
    for (const auto& img : s.images) {
        nlohmann::json wj = img.workload;
        if (!img.explicit_seed) {
            wj.erase("seed");
        }
        images.push_back(nlohmann::json{{"owner", img.owner.str()},
                                        {"name", img.name.str()},
                                        {"workload", wj},
                                        {"request", img.request},
                                        {"base", img.base}});
    }
    nlohmann::json requests = nlohmann::json::array();
    for (const auto& r : s.requests) {
        nlohmann::json rj{{"id", r.id.str()}, {"owner", r.owner.str()}, {"image", r.image.str()}, {"device", r.device.str()}};
        if (r.at) {
            rj["at"] = *r.at;
        }
        if (!r.after_stable.empty()) {
            nlohmann::json deps = nlohmann::json::array();
            for (const auto& d : r.after_stable) {
                deps.push_back(d.str());
            }
            rj["after_stable"] = std::move(deps);
        }
        requests.push_back(std::move(rj));
    }
    nlohmann::json expectations = nlohmann::json::array();
    for (const auto& e : s.expectations) {
        nlohmann::json ej = e.args;
        ej["name"] = e.name;
        ej["kind"] = e.kind;
        expectations.push_back(std::move(ej));
    }
    j = nlohmann::json{{"name", s.name},
                       {"description", s.description},
                       {"duration_s", s.duration_s},
                       {"seed", s.seed},
                       {"devices", std::move(devices)},
                       {"images", std::move(images)},
                       {"requests", std::move(requests)},
                       {"policy", s.options.policy},
                       {"forecast", s.options.forecast},
                       {"monitor", s.options.monitor},
                       {"expectations", std::move(expectations)}};
}

ScenarioConfig parse_scenario(const nlohmann::json& doc)
{
    if (!doc.is_object()) {
        throw ConfigError("scenario: top level must be an object");
    }
    ScenarioConfig s;
    with_context("scenario", [&] {
        s.name = doc.at("name").get<std::string>();
        s.description = doc.value("description", std::string{});
        s.duration_s = doc.value("duration_s", s.duration_s);
        s.seed = doc.value("seed", s.seed);
    });
    if (doc.contains("policy")) {
        with_context("policy", [&] { s.options.policy = doc.at("policy").get<OptimizationPolicy>(); });
    }
    if (doc.contains("forecast")) {
        with_context("forecast", [&] { s.options.forecast = doc.at("forecast").get<ForecastConfig>(); });
    }
    if (doc.contains("monitor")) {
        with_context("monitor", [&] { s.options.monitor = doc.at("monitor").get<MonitorConfig>(); });
    }

    const auto devices = doc.value("devices", nlohmann::json::array());
    for (std::size_t i = 0; i < devices.size(); ++i) {
        with_context("devices[" + std::to_string(i) + "]", [&] {
            const auto& dj = devices[i];
            DeviceSpec d{DeviceId{dj.at("id").get<std::string>()}, HostConfig{}};
            d.host.total = limits_with_defaults(dj, "total", d.host.total);
            d.host.preoccupied = limits_with_defaults(dj, "preoccupied", d.host.preoccupied);
            d.host.tick_s = dj.value("tick_s", d.host.tick_s);
            s.devices.push_back(std::move(d));
        });
    }

    const auto images = doc.value("images", nlohmann::json::array());
    for (std::size_t i = 0; i < images.size(); ++i) {
        with_context("images[" + std::to_string(i) + "]", [&] {
            const auto& ij = images[i];
            ImageSpec img;
            img.owner = OwnerId{ij.at("owner").get<std::string>()};
            img.name = ImageName{ij.at("name").get<std::string>()};
            const auto& wj = ij.at("workload");
            img.workload = wj.get<WorkloadSpec>();
            img.explicit_seed = wj.contains("seed");
            if (!img.explicit_seed) {
                img.workload.seed = derive_seed(s.seed, i);
            }
            img.request = limits_with_defaults(ij, "request", s.options.policy.defaults.request);
            img.base = limits_with_defaults(ij, "base", s.options.policy.defaults.base);
            s.images.push_back(std::move(img));
        });
    }

    const auto requests = doc.value("requests", nlohmann::json::array());
    for (std::size_t i = 0; i < requests.size(); ++i) {
        with_context("requests[" + std::to_string(i) + "]", [&] {
            const auto& rj = requests[i];
            RequestSpec r;
            r.id = DeploymentId{rj.at("id").get<std::string>()};
            r.owner = OwnerId{rj.at("owner").get<std::string>()};
            r.image = ImageName{rj.at("image").get<std::string>()};
            r.device = rj.contains("device") ? DeviceId{rj.at("device").get<std::string>()} : s.devices.front().id;
            if (rj.contains("at")) {
                r.at = rj.at("at").get<std::int64_t>();
            }
            for (const auto& dep : rj.value("after_stable", nlohmann::json::array())) {
                r.after_stable.emplace_back(dep.get<std::string>());
            }
            s.requests.push_back(std::move(r));
        });
    }

    const auto expectations = doc.value("expectations", nlohmann::json::array());
    for (std::size_t i = 0; i < expectations.size(); ++i) {
        with_context("expectations[" + std::to_string(i) + "]", [&] {
            Expectation e;
            e.args = expectations[i];
            e.kind = e.args.at("kind").get<std::string>();
            e.name = e.args.value("name", e.kind + "#" + std::to_string(i));
            e.args.erase("kind");
            e.args.erase("name");
            s.expectations.push_back(std::move(e));
        });
    }
    s.validate();
    return s;
}

ScenarioConfig load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open scenario file " + path.string());
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_scenario(doc);
}

} // namespace orchestrion
