#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "orchestrion/scenario.hpp"

namespace orchestrion {

struct IngressOptions {
    std::string host = "127.0.0.1";
    /// 0 picks a free port.
    int port = 8080;
    /// Wall-clock milliseconds per simulated tick.
    int tick_ms = 1000;
    /// Device that receives requests; defaults to the first device of the scenario.
    std::optional<DeviceId> entry;
};

/// Live mode: the scenario's devices advance in real time on one simulation thread, and deployment
/// requests arrive over HTTP.
///
///   POST /deploy            {"owner": "...", "image": "..."}  -> 202 {"deployment_id": "..."}
///   GET  /deployments/<id>  -> 200 status document, 404 when unknown
///   GET  /health            -> 200 {"t": <simulated seconds>}
///
/// Requests are queued and handed to the simulation thread at the start of its next tick.
class IngressService {
public:
    IngressService(ScenarioConfig config, IngressOptions options);
    ~IngressService();
    IngressService(const IngressService&) = delete;
    IngressService& operator=(const IngressService&) = delete;

    /// Binds the socket and starts both threads. Returns the bound port.
    int start();
    /// Blocks until stop() is called from another thread or a signal handler.
    void wait();
    void stop();

    /// Same as POST /deploy.
    std::string deploy(const std::string& owner, const std::string& image);
    /// Same as GET /deployments/<id>.
    [[nodiscard]] std::optional<nlohmann::json> deployment(const std::string& id) const;
    [[nodiscard]] std::int64_t now() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace orchestrion
