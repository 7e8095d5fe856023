#include "orchestrion/ingress.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <set>
#include <thread>

#include <httplib.h>

#include "orchestrion/simulation.hpp"

namespace orchestrion {

struct IngressService::Impl {
    Impl(ScenarioConfig config, IngressOptions opts)
        : options(std::move(opts)), cluster(config),
          entry(options.entry ? *options.entry : config.devices.front().id)
    {
        cluster.device(entry);
    }

    struct Pending {
        DeploymentId id;
        OwnerId owner;
        ImageName image;
    };

    IngressOptions options;
    mutable std::mutex mutex;
    std::condition_variable stopped_cv;
    Cluster cluster;
    DeviceId entry;
    std::deque<Pending> queue;
    std::set<std::string> queued_ids;
    std::uint64_t next_id = 0;
    std::atomic<bool> running{false};
    httplib::Server server;
    std::thread sim_thread;
    std::thread http_thread;

    void simulate()
    {
        auto next = std::chrono::steady_clock::now();
        while (running) {
            {
                std::lock_guard lock(mutex);
                while (!queue.empty()) {
                    Pending p = std::move(queue.front());
                    queue.pop_front();
                    queued_ids.erase(p.id.str());
                    cluster.submit(entry, p.owner, p.image, p.id);
                }
                cluster.step();
            }
            next += std::chrono::milliseconds(options.tick_ms);
            std::this_thread::sleep_until(next);
        }
    }

    void routes(IngressService& self)
    {
        server.Post("/deploy", [&self](const httplib::Request& req, httplib::Response& res) {
            nlohmann::json body;
            try {
                body = nlohmann::json::parse(req.body);
                const auto id = self.deploy(body.at("owner").get<std::string>(), body.at("image").get<std::string>());
                res.status = 202;
                res.set_content(nlohmann::json{{"deployment_id", id}}.dump(), "application/json");
            } catch (const std::exception& e) {
                res.status = 400;
                res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
            }
        });
        server.Get(R"(/deployments/([^/]+))", [&self](const httplib::Request& req, httplib::Response& res) {
            const auto status = self.deployment(req.matches[1].str());
            if (!status) {
                res.status = 404;
                res.set_content(nlohmann::json{{"error", "unknown deployment"}}.dump(), "application/json");
                return;
            }
            res.set_content(status->dump(), "application/json");
        });
        server.Get("/health", [&self](const httplib::Request&, httplib::Response& res) {
            res.set_content(nlohmann::json{{"t", self.now()}}.dump(), "application/json");
        });
    }
};

IngressService::IngressService(ScenarioConfig config, IngressOptions options)
    : impl_(std::make_unique<Impl>(std::move(config), std::move(options)))
{
    if (impl_->options.tick_ms <= 0) {
        throw ConfigError("ingress: tick_ms must be > 0");
    }
}

IngressService::~IngressService() { stop(); }

int IngressService::start()
{
    if (impl_->running.exchange(true)) {
        throw ContractViolation("ingress already started");
    }
    impl_->routes(*this);
    int port = impl_->options.port;
    if (port == 0) {
        port = impl_->server.bind_to_any_port(impl_->options.host);
    } else if (!impl_->server.bind_to_port(impl_->options.host, port)) {
        port = -1;
    }
    if (port < 0) {
        impl_->running = false;
        throw ConfigError("ingress: cannot bind " + impl_->options.host + ":" + std::to_string(impl_->options.port));
    }
    impl_->http_thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->sim_thread = std::thread([this] { impl_->simulate(); });
    return port;
}

void IngressService::wait()
{
    std::unique_lock lock(impl_->mutex);
    impl_->stopped_cv.wait(lock, [this] { return !impl_->running.load(); });
}

void IngressService::stop()
{
    if (!impl_) {
        return;
    }
    {
        std::lock_guard lock(impl_->mutex);
        impl_->running = false;
    }
    impl_->stopped_cv.notify_all();
    impl_->server.stop();
    if (impl_->http_thread.joinable()) {
        impl_->http_thread.join();
    }
    if (impl_->sim_thread.joinable()) {
        impl_->sim_thread.join();
    }
}

std::string IngressService::deploy(const std::string& owner, const std::string& image)
{
    std::lock_guard lock(impl_->mutex);
    std::string id = "req-" + std::to_string(++impl_->next_id);
    impl_->queue.push_back(Impl::Pending{DeploymentId{id}, OwnerId{owner}, ImageName{image}});
    impl_->queued_ids.insert(id);
    return id;
}

std::optional<nlohmann::json> IngressService::deployment(const std::string& id) const
{
    std::lock_guard lock(impl_->mutex);
    if (impl_->queued_ids.contains(id)) {
        return nlohmann::json{{"id", id}, {"state", "queued"}};
    }
    return impl_->cluster.status(DeploymentId{id});
}

std::int64_t IngressService::now() const
{
    std::lock_guard lock(impl_->mutex);
    return impl_->cluster.now();
}

} // namespace orchestrion
