#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "orchestrion/model.hpp"

namespace orchestrion {

/// Orchestration actions and the topic each travels on:
///
///   Action                          Topic
///   deployment_request              deploy
///   deployment_analysis_request     analyze
///   deployment_optimization_request analyze
///   forecast_request                forecast
///   forecast_response               forecast
///   deployment_accept               deploy
///   deployment_cancel               deploy
///   deployment_update               deploy
///   monitoring_result               monitor
enum class Action : std::uint8_t {
    deployment_request,
    deployment_analysis_request,
    deployment_optimization_request,
    forecast_request,
    forecast_response,
    deployment_accept,
    deployment_cancel,
    deployment_update,
    monitoring_result,
};

enum class Topic : std::uint8_t { deploy, analyze, forecast, monitor, cluster_deploy, cluster_monitor };

std::string_view to_string(Action action);
Action parse_action(std::string_view text);
std::string_view to_string(Topic topic);
Topic parse_topic(std::string_view text);

/// Local topic an action must be published on.
Topic topic_for(Action action);
bool is_cluster_topic(Topic topic) noexcept;
/// deploy -> cluster/deploy, monitor -> cluster/monitor; other topics are not shareable.
Topic cluster_topic_of(Topic topic);
/// cluster/x -> x; local topics map to themselves.
Topic local_topic_of(Topic topic) noexcept;
/// True when `action` may appear on `topic` (cluster topics carry their local topic's actions).
bool action_allowed_on(Action action, Topic topic) noexcept;

struct Message {
    Action action = Action::monitoring_result;
    nlohmann::json payload = nlohmann::json::object();
    DeviceId origin;
    std::string correlation_id;
    /// Assigned by the bus on first publish; preserved across bridges.
    std::string id;
    std::int64_t timestamp = 0;
};

/// Wire document: {"action": "...", "id", "origin", "correlation_id", "timestamp", "payload"}.
nlohmann::json to_wire(const Message& msg);
/// Throws ProtocolError on malformed documents or unknown actions.
Message from_wire(const nlohmann::json& doc);

/// A subscriber's ordered message stream.
class Subscription {
public:
    explicit Subscription(Topic topic) : topic_(topic) {}

    [[nodiscard]] Topic topic() const noexcept { return topic_; }
    std::optional<Message> try_next();
    [[nodiscard]] std::size_t pending() const;

private:
    friend class Bus;
    struct Entry {
        std::uint64_t seq;
        Message msg;
    };

    Topic topic_;
    mutable std::mutex mutex_;
    std::deque<Entry> queue_;
};

/// Messages selected for re-broadcast to peers under the cluster/ prefix.
struct BridgeRule {
    Topic topic;
    std::function<bool(const Message&)> filter;
};

struct TraceEntry {
    Topic topic;
    Action action;
    std::string id;
    std::string correlation_id;
    std::string deployment_id;
    DeviceId origin;
    std::int64_t timestamp;
};

/// In-process topic fabric for one device. publish() may be called from any thread.
class Bus {
public:
    explicit Bus(DeviceId self);
    Bus(const Bus&) = delete;
    Bus& operator=(const Bus&) = delete;

    [[nodiscard]] const DeviceId& self() const noexcept { return self_; }

    /// Fans `msg` out to current subscribers of `topic` and to bridged peers.
    /// Throws ProtocolError on action/topic mismatch or a direct publish on a cluster topic.
    void publish(Topic topic, Message msg);

    std::shared_ptr<Subscription> subscribe(Topic topic);

    /// Registers peers for re-broadcast. Re-adding a peer is a no-op; adding self is a contract violation.
    void bridge(const std::vector<Bus*>& peers, std::vector<BridgeRule> rules);

    /// Oldest undelivered message across all subscriptions, in publish order.
    struct Delivery {
        Subscription* subscription;
        Message msg;
    };
    std::optional<Delivery> poll();
    [[nodiscard]] bool idle() const;

    /// Every publication and bridged receipt seen on this bus.
    [[nodiscard]] std::vector<TraceEntry> trace() const;
    void set_clock(std::function<std::int64_t()> clock);

private:
    void deliver_locked(Topic topic, const Message& msg);
    void receive_bridged(Topic cluster_topic, const Message& msg);

    DeviceId self_;
    mutable std::mutex mutex_;
    std::vector<std::shared_ptr<Subscription>> subscriptions_;
    std::vector<Bus*> peers_;
    std::vector<BridgeRule> rules_;
    std::vector<TraceEntry> trace_;
    std::function<std::int64_t()> clock_;
    std::uint64_t next_seq_ = 0;
    std::uint64_t next_id_ = 0;
};

} // namespace orchestrion
