#include "orchestrion/bus.hpp"

#include <algorithm>
#include <array>
#include <limits>

namespace orchestrion {

namespace {

struct ActionRow {
    Action action;
    std::string_view name;
    Topic topic;
};

constexpr std::array<ActionRow, 9> kActionTable{{
    {Action::deployment_request, "deployment_request", Topic::deploy},
    {Action::deployment_analysis_request, "deployment_analysis_request", Topic::analyze},
    {Action::deployment_optimization_request, "deployment_optimization_request", Topic::analyze},
    {Action::forecast_request, "forecast_request", Topic::forecast},
    {Action::forecast_response, "forecast_response", Topic::forecast},
    {Action::deployment_accept, "deployment_accept", Topic::deploy},
    {Action::deployment_cancel, "deployment_cancel", Topic::deploy},
    {Action::deployment_update, "deployment_update", Topic::deploy},
    {Action::monitoring_result, "monitoring_result", Topic::monitor},
}};

constexpr std::array<std::pair<Topic, std::string_view>, 6> kTopicNames{{
    {Topic::deploy, "deploy"},
    {Topic::analyze, "analyze"},
    {Topic::forecast, "forecast"},
    {Topic::monitor, "monitor"},
    {Topic::cluster_deploy, "cluster/deploy"},
    {Topic::cluster_monitor, "cluster/monitor"},
}};

const ActionRow& row_for(Action action)
{
    for (const auto& row : kActionTable) {
        if (row.action == action) {
            return row;
        }
    }
    throw ProtocolError("unknown action");
}

} // namespace

std::string_view to_string(Action action) { return row_for(action).name; }

Action parse_action(std::string_view text)
{
    for (const auto& row : kActionTable) {
        if (row.name == text) {
            return row.action;
        }
    }
    throw ProtocolError("unknown action '" + std::string(text) + "'");
}

std::string_view to_string(Topic topic)
{
    for (const auto& [t, name] : kTopicNames) {
        if (t == topic) {
            return name;
        }
    }
    return "?";
}

Topic parse_topic(std::string_view text)
{
    for (const auto& [t, name] : kTopicNames) {
        if (name == text) {
            return t;
        }
    }
    throw ProtocolError("unknown topic '" + std::string(text) + "'");
}

Topic topic_for(Action action) { return row_for(action).topic; }

bool is_cluster_topic(Topic topic) noexcept
{
    return topic == Topic::cluster_deploy || topic == Topic::cluster_monitor;
}

Topic cluster_topic_of(Topic topic)
{
    switch (topic) {
    case Topic::deploy:
        return Topic::cluster_deploy;
    case Topic::monitor:
        return Topic::cluster_monitor;
    default:
        throw ProtocolError("topic '" + std::string(to_string(topic)) + "' cannot be shared with peers");
    }
}

Topic local_topic_of(Topic topic) noexcept
{
    switch (topic) {
    case Topic::cluster_deploy:
        return Topic::deploy;
    case Topic::cluster_monitor:
        return Topic::monitor;
    default:
        return topic;
    }
}

bool action_allowed_on(Action action, Topic topic) noexcept
{
    for (const auto& row : kActionTable) {
        if (row.action == action) {
            return row.topic == local_topic_of(topic);
        }
    }
    return false;
}

nlohmann::json to_wire(const Message& msg)
{
    return nlohmann::json{
        {"action", std::string(to_string(msg.action))},
        {"id", msg.id},
        {"origin", msg.origin.str()},
        {"correlation_id", msg.correlation_id},
        {"timestamp", msg.timestamp},
        {"payload", msg.payload},
    };
}

Message from_wire(const nlohmann::json& doc)
{
    if (!doc.is_object() || !doc.contains("action") || !doc.at("action").is_string()) {
        throw ProtocolError("wire message must be an object with a string 'action' field");
    }
    Message msg;
    try {
        msg.action = parse_action(doc.at("action").get<std::string>());
        msg.id = doc.value("id", std::string{});
        msg.origin = DeviceId(doc.value("origin", std::string("0.0.0.0")));
        msg.correlation_id = doc.value("correlation_id", std::string{});
        msg.timestamp = doc.value("timestamp", std::int64_t{0});
        msg.payload = doc.value("payload", nlohmann::json::object());
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("malformed wire message: ") + e.what());
    } catch (const ContractViolation& e) {
        throw ProtocolError(std::string("malformed wire message: ") + e.what());
    }
    return msg;
}

std::optional<Message> Subscription::try_next()
{
    std::lock_guard lock(mutex_);
    if (queue_.empty()) {
        return std::nullopt;
    }
    Message msg = std::move(queue_.front().msg);
    queue_.pop_front();
    return msg;
}

std::size_t Subscription::pending() const
{
    std::lock_guard lock(mutex_);
    return queue_.size();
}

Bus::Bus(DeviceId self) : self_(std::move(self)) {}

void Bus::set_clock(std::function<std::int64_t()> clock)
{
    std::lock_guard lock(mutex_);
    clock_ = std::move(clock);
}

void Bus::publish(Topic topic, Message msg)
{
    if (is_cluster_topic(topic)) {
        throw ProtocolError("cluster topics are only written by bridges");
    }
    if (!action_allowed_on(msg.action, topic)) {
        throw ProtocolError("action '" + std::string(to_string(msg.action)) + "' is not carried on topic '" +
                            std::string(to_string(topic)) + "'");
    }

    std::vector<Bus*> targets;
    {
        std::lock_guard lock(mutex_);
        if (msg.id.empty()) {
            msg.id = self_.str() + "#" + std::to_string(++next_id_);
            msg.origin = self_;
        }
        if (clock_) {
            msg.timestamp = clock_();
        }
        deliver_locked(topic, msg);
        for (const auto& rule : rules_) {
            if (rule.topic == topic && (!rule.filter || rule.filter(msg))) {
                targets = peers_;
                break;
            }
        }
    }
    if (!targets.empty()) {
        const Topic shared = cluster_topic_of(topic);
        for (Bus* peer : targets) {
            peer->receive_bridged(shared, msg);
        }
    }
}

void Bus::receive_bridged(Topic cluster_topic, const Message& msg)
{
    // Cluster topics never match a bridge rule, so nothing received here is forwarded again.
    std::lock_guard lock(mutex_);
    deliver_locked(cluster_topic, msg);
}

void Bus::deliver_locked(Topic topic, const Message& msg)
{
    std::string deployment;
    if (msg.payload.is_object()) {
        if (auto it = msg.payload.find("deployment_id"); it != msg.payload.end() && it->is_string()) {
            deployment = it->get<std::string>();
        }
    }
    trace_.push_back(TraceEntry{topic, msg.action, msg.id, msg.correlation_id, deployment, msg.origin, msg.timestamp});

    for (const auto& sub : subscriptions_) {
        if (sub->topic() == topic) {
            std::lock_guard sub_lock(sub->mutex_);
            sub->queue_.push_back(Subscription::Entry{next_seq_++, msg});
        }
    }
}

std::shared_ptr<Subscription> Bus::subscribe(Topic topic)
{
    auto sub = std::make_shared<Subscription>(topic);
    std::lock_guard lock(mutex_);
    subscriptions_.push_back(sub);
    return sub;
}

void Bus::bridge(const std::vector<Bus*>& peers, std::vector<BridgeRule> rules)
{
    std::lock_guard lock(mutex_);
    for (Bus* peer : peers) {
        if (peer == nullptr) {
            continue;
        }
        if (peer == this || peer->self_ == self_) {
            throw ContractViolation("bridge: peer set must not contain this device");
        }
        if (std::find(peers_.begin(), peers_.end(), peer) == peers_.end()) {
            peers_.push_back(peer);
        }
    }
    for (auto& rule : rules) {
        if (is_cluster_topic(rule.topic)) {
            throw ContractViolation("bridge: rules name local topics");
        }
        cluster_topic_of(rule.topic);
        rules_.push_back(std::move(rule));
    }
}

std::optional<Bus::Delivery> Bus::poll()
{
    std::lock_guard lock(mutex_);
    Subscription* best = nullptr;
    std::uint64_t best_seq = std::numeric_limits<std::uint64_t>::max();
    for (const auto& sub : subscriptions_) {
        std::lock_guard sub_lock(sub->mutex_);
        if (!sub->queue_.empty() && sub->queue_.front().seq < best_seq) {
            best_seq = sub->queue_.front().seq;
            best = sub.get();
        }
    }
    if (best == nullptr) {
        return std::nullopt;
    }
    std::lock_guard sub_lock(best->mutex_);
    Delivery out{best, std::move(best->queue_.front().msg)};
    best->queue_.pop_front();
    return out;
}

bool Bus::idle() const
{
    std::lock_guard lock(mutex_);
    return std::all_of(subscriptions_.begin(), subscriptions_.end(), [](const auto& sub) {
        std::lock_guard sub_lock(sub->mutex_);
        return sub->queue_.empty();
    });
}

std::vector<TraceEntry> Bus::trace() const
{
    std::lock_guard lock(mutex_);
    return trace_;
}

} // namespace orchestrion
