#include "sgs/proxy.hpp"

#include <algorithm>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "sgs/error.hpp"

namespace sgs::proxy {

bool matches(const TopicFilter& filter, const Topic& topic) noexcept {
    const auto& f = filter.segments();
    const auto& t = topic.segments();
    std::size_t i = 0;
    for (; i < f.size(); ++i) {
        if (f[i] == TopicFilter::multi_level) return true;
        if (i >= t.size()) return false;
        if (f[i] != TopicFilter::single_level && f[i] != t[i]) return false;
    }
    return i == t.size();
}

// ---------------------------------------------------------------------------
// TopicRouter

struct TopicRouter::Node {
    std::map<std::string, std::unique_ptr<Node>> children;
    std::map<std::string, Entry> entries;  // keyed by subscriber id

    [[nodiscard]] bool empty() const { return children.empty() && entries.empty(); }
};

namespace {

bool by_id_then_filter(const Subscription& a, const Subscription& b) {
    if (a.subscriber_id != b.subscriber_id) return a.subscriber_id < b.subscriber_id;
    return a.filter.str() < b.filter.str();
}

}  // namespace

TopicRouter::TopicRouter() : root_(std::make_unique<Node>()) {}
TopicRouter::~TopicRouter() = default;

void TopicRouter::subscribe(Subscription s, std::weak_ptr<Subscriber> sink) {
    std::lock_guard lock(mutex_);
    Node* node = root_.get();
    for (const auto& seg : s.filter.segments()) {
        auto& child = node->children[seg];
        if (!child) child = std::make_unique<Node>();
        node = child.get();
    }
    auto id = s.subscriber_id;
    node->entries.insert_or_assign(std::move(id), Entry{std::move(s), std::move(sink)});
}

bool TopicRouter::unsubscribe(const std::string& subscriber_id, const TopicFilter& filter) {
    std::lock_guard lock(mutex_);
    std::vector<std::pair<Node*, const std::string*>> path;
    Node* node = root_.get();
    for (const auto& seg : filter.segments()) {
        const auto it = node->children.find(seg);
        if (it == node->children.end()) return false;
        path.emplace_back(node, &it->first);
        node = it->second.get();
    }
    if (node->entries.erase(subscriber_id) == 0) return false;
    // Prune now-empty branches bottom-up.
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
        auto& [parent, key] = *it;
        const auto child = parent->children.find(*key);
        if (!child->second->empty()) break;
        parent->children.erase(child);
    }
    return true;
}

std::size_t TopicRouter::remove_subscriber(const std::string& subscriber_id) {
    std::lock_guard lock(mutex_);
    std::size_t removed = 0;
    auto prune = [&](auto& self, Node& node) -> void {
        removed += node.entries.erase(subscriber_id);
        for (auto it = node.children.begin(); it != node.children.end();) {
            self(self, *it->second);
            it = it->second->empty() ? node.children.erase(it) : std::next(it);
        }
    };
    prune(prune, *root_);
    return removed;
}

void TopicRouter::collect(const Node& node, const std::vector<std::string>& segments, std::size_t level,
                          std::vector<const Entry*>& out) const {
    auto add_all = [&](const Node& n) {
        for (const auto& [_, e] : n.entries) out.push_back(&e);
    };
    const auto hash = node.children.find(std::string(TopicFilter::multi_level));
    if (hash != node.children.end()) add_all(*hash->second);
    if (level == segments.size()) {
        add_all(node);
        return;
    }
    if (const auto lit = node.children.find(segments[level]); lit != node.children.end())
        collect(*lit->second, segments, level + 1, out);
    if (const auto plus = node.children.find(std::string(TopicFilter::single_level)); plus != node.children.end())
        collect(*plus->second, segments, level + 1, out);
}

std::vector<const TopicRouter::Entry*> TopicRouter::match_entries(const Topic& topic) const {
    std::vector<const Entry*> out;
    collect(*root_, topic.segments(), 0, out);
    std::sort(out.begin(), out.end(),
              [](const Entry* a, const Entry* b) { return by_id_then_filter(a->subscription, b->subscription); });
    return out;
}

std::vector<Subscription> TopicRouter::match_subscribers(const Topic& topic) const {
    std::lock_guard lock(mutex_);
    std::vector<Subscription> out;
    for (const auto* e : match_entries(topic)) out.push_back(e->subscription);
    return out;
}

std::vector<TopicRouter::Target> TopicRouter::match_targets(const Topic& topic) const {
    std::lock_guard lock(mutex_);
    std::vector<Target> out;
    for (const auto* e : match_entries(topic)) out.push_back(Target{e->subscription, e->sink.lock()});
    return out;
}

std::vector<Subscription> TopicRouter::subscriptions() const {
    std::lock_guard lock(mutex_);
    std::vector<Subscription> out;
    auto walk = [&](auto& self, const Node& node) -> void {
        for (const auto& [_, e] : node.entries) out.push_back(e.subscription);
        for (const auto& [_, child] : node.children) self(self, *child);
    };
    walk(walk, *root_);
    std::sort(out.begin(), out.end(), by_id_then_filter);
    return out;
}

void TopicRouter::record_topic(const Topic& topic) {
    std::lock_guard lock(mutex_);
    known_topics_.insert(topic);
}

std::vector<Topic> TopicRouter::known_topics() const {
    std::lock_guard lock(mutex_);
    return {known_topics_.begin(), known_topics_.end()};
}

// ---------------------------------------------------------------------------
// MessageStore

MessageStore::MessageStore(std::size_t history_depth) : depth_(std::max<std::size_t>(1, history_depth)) {}

void MessageStore::put(std::shared_ptr<const StoredMessage> m, bool retain) {
    auto& slot = slots_[m->topic];
    slot.ring.push_back(std::move(m));
    slot.retain = retain;
    while (slot.ring.size() > depth_) slot.ring.pop_front();
}

std::shared_ptr<const StoredMessage> MessageStore::append(Topic topic, std::string raw_payload,
                                                          std::string annotated_jsonld, Instant received_at,
                                                          bool retain) {
    std::lock_guard lock(mutex_);
    auto m = std::make_shared<const StoredMessage>(StoredMessage{
        std::move(topic), std::move(raw_payload), std::move(annotated_jsonld), last_sequence_ + 1, received_at});
    last_sequence_ = m->sequence;
    put(m, retain);
    return m;
}

void MessageStore::store_latest(StoredMessage m, bool retain) {
    std::lock_guard lock(mutex_);
    if (m.sequence <= last_sequence_)
        throw std::invalid_argument("sequence " + std::to_string(m.sequence) + " does not exceed " +
                                    std::to_string(last_sequence_));
    last_sequence_ = m.sequence;
    put(std::make_shared<const StoredMessage>(std::move(m)), retain);
}

std::shared_ptr<const StoredMessage> MessageStore::fetch_latest(const Topic& topic) const {
    std::lock_guard lock(mutex_);
    const auto it = slots_.find(topic);
    if (it == slots_.end() || it->second.ring.empty()) return nullptr;
    return it->second.ring.back();
}

bool MessageStore::retained(const Topic& topic) const {
    std::lock_guard lock(mutex_);
    const auto it = slots_.find(topic);
    return it != slots_.end() && it->second.retain;
}

std::vector<std::shared_ptr<const StoredMessage>> MessageStore::history(const Topic& topic) const {
    std::lock_guard lock(mutex_);
    const auto it = slots_.find(topic);
    if (it == slots_.end()) return {};
    return {it->second.ring.begin(), it->second.ring.end()};
}

std::uint64_t MessageStore::last_sequence() const {
    std::lock_guard lock(mutex_);
    return last_sequence_;
}

std::size_t MessageStore::topic_count() const {
    std::lock_guard lock(mutex_);
    return slots_.size();
}

// ---------------------------------------------------------------------------
// DeliveryQueue

DeliveryQueue::DeliveryQueue(std::size_t capacity, std::shared_ptr<std::atomic<std::uint64_t>> drops)
    : capacity_(std::max<std::size_t>(1, capacity)), drops_(std::move(drops)) {}

bool DeliveryQueue::push(Delivery d) {
    bool kept_all = true;
    {
        std::lock_guard lock(mutex_);
        if (closed_) return false;
        if (items_.size() >= capacity_) {
            items_.pop_front();
            if (drops_) drops_->fetch_add(1);
            kept_all = false;
        }
        items_.push_back(std::move(d));
    }
    ready_.notify_one();
    return kept_all;
}

std::optional<Delivery> DeliveryQueue::pop() {
    std::unique_lock lock(mutex_);
    ready_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    auto d = std::move(items_.front());
    items_.pop_front();
    return d;
}

std::optional<Delivery> DeliveryQueue::try_pop() {
    std::lock_guard lock(mutex_);
    if (items_.empty()) return std::nullopt;
    auto d = std::move(items_.front());
    items_.pop_front();
    return d;
}

void DeliveryQueue::close() {
    {
        std::lock_guard lock(mutex_);
        closed_ = true;
    }
    ready_.notify_all();
}

std::size_t DeliveryQueue::size() const {
    std::lock_guard lock(mutex_);
    return items_.size();
}

// ---------------------------------------------------------------------------
// Gateway

Gateway::Gateway(annotation::SensorRegistry registry, annotation::DomainOntologyMap dom, GatewayOptions options,
                 std::shared_ptr<const annotation::GraphSerializer> serializer)
    : registry_(std::move(registry)),
      dom_(std::move(dom)),
      options_(options),
      serializer_(serializer ? std::move(serializer) : std::make_shared<annotation::JsonLdSerializer>()),
      store_(options.store_history) {
    dom_.complete_from(registry_);
}

std::unique_ptr<DeliveryQueue> Gateway::make_queue() const {
    return std::make_unique<DeliveryQueue>(options_.subscriber_queue_capacity, counters_.drops);
}

IngestResult Gateway::ingest(const IngestEvent& event) {
    const auto north = north_topic_for(event.topic);
    const auto arrival = event.arrival == Instant{} ? now_utc() : event.arrival;

    SensorReading reading;
    try {
        reading = annotation::parse_reading(event.payload, event.content_format, event.topic, registry_, arrival);
        reading.source_protocol = event.source_protocol;
    } catch (const Error& e) {
        counters_.parse_errors.fetch_add(1);
        spdlog::warn("dropping {} message on {}: {}", to_string(event.source_protocol), event.topic.str(), e.what());
        return {nullptr, 0, e.what()};
    }
    if (reading.time_from_gateway)
        spdlog::debug("reading on {} carried no time; using gateway arrival time", event.topic.str());

    std::string annotated;
    try {
        annotated = serializer_->serialize(annotation::annotate(reading, registry_, dom_));
    } catch (const Error& e) {
        counters_.annotation_errors.fetch_add(1);
        spdlog::warn("cannot annotate reading on {}: {}", event.topic.str(), e.what());
        return {nullptr, 0, e.what()};
    }

    IngestResult result;
    std::lock_guard lock(pipeline_mutex_);
    result.stored = store_.append(event.topic, event.payload, std::move(annotated), arrival, event.retain);
    const std::shared_ptr<const std::string> payload(result.stored, &result.stored->annotated_jsonld);
    for (const auto& target : router_.match_targets(north)) {
        if (!target.sink) continue;
        try {
            target.sink->deliver(Delivery{north, payload, result.stored->sequence, false});
            ++result.delivered;
        } catch (const std::exception& e) {
            spdlog::warn("delivery to {} failed: {}", target.subscription.subscriber_id, e.what());
        }
    }
    router_.record_topic(north);
    counters_.ingested.fetch_add(1);
    counters_.deliveries.fetch_add(result.delivered);
    return result;
}

}  // namespace sgs::proxy
