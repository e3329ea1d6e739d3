#pragma once

// Multi-protocol proxy core: topic router, latest-message store and the
// ingest pipeline that annotates raw southbound messages exactly once and
// fans the JSON-LD out to northbound subscribers.

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sgs/annotation.hpp"
#include "sgs/model.hpp"

namespace sgs::proxy {

/// MQTT 3.1.1 matching: '+' matches exactly one level; a trailing '#'
/// matches the remainder including the parent level ("a/#" matches "a").
bool matches(const TopicFilter& filter, const Topic& topic) noexcept;

enum class Transport { mqtt, coap_observe };

struct Delivery {
    Topic topic;
    std::shared_ptr<const std::string> payload;
    std::uint64_t sequence = 0;
    bool retain = false;
};

class Subscriber {
public:
    virtual ~Subscriber() = default;
    /// Must not block; implementations enqueue.
    virtual void deliver(const Delivery& d) = 0;
};

struct Subscription {
    std::string subscriber_id;
    TopicFilter filter;
    std::uint8_t qos = 0;
    Transport transport = Transport::mqtt;

    friend bool operator==(const Subscription&, const Subscription&) = default;
};

/// Subscription registry backed by a topic trie.
class TopicRouter {
public:
    TopicRouter();
    ~TopicRouter();
    TopicRouter(const TopicRouter&) = delete;
    TopicRouter& operator=(const TopicRouter&) = delete;

    /// A second subscription with the same (subscriber_id, filter) replaces the first.
    void subscribe(Subscription s, std::weak_ptr<Subscriber> sink = {});
    bool unsubscribe(const std::string& subscriber_id, const TopicFilter& filter);
    std::size_t remove_subscriber(const std::string& subscriber_id);

    /// Matching subscriptions ordered by (subscriber_id, filter string).
    [[nodiscard]] std::vector<Subscription> match_subscribers(const Topic& topic) const;

    struct Target {
        Subscription subscription;
        std::shared_ptr<Subscriber> sink;
    };
    [[nodiscard]] std::vector<Target> match_targets(const Topic& topic) const;

    [[nodiscard]] std::vector<Subscription> subscriptions() const;

    void record_topic(const Topic& topic);
    [[nodiscard]] std::vector<Topic> known_topics() const;

private:
    struct Node;
    struct Entry {
        Subscription subscription;
        std::weak_ptr<Subscriber> sink;
    };

    void collect(const Node& node, const std::vector<std::string>& segments, std::size_t level,
                 std::vector<const Entry*>& out) const;
    std::vector<const Entry*> match_entries(const Topic& topic) const;

    mutable std::mutex mutex_;
    std::unique_ptr<Node> root_;
    std::set<Topic> known_topics_;
};

/// Latest-message buffer keyed by exact topic. Depth 1 is the normative
/// behaviour; a longer history ring is kept when configured.
class MessageStore {
public:
    explicit MessageStore(std::size_t history_depth = 1);

    /// Assigns the next gateway-wide sequence number and stores the record.
    std::shared_ptr<const StoredMessage> append(Topic topic, std::string raw_payload, std::string annotated_jsonld,
                                                Instant received_at, bool retain = false);

    /// Stores a record that already carries a sequence number. Throws
    /// std::invalid_argument unless it exceeds every sequence stored so far.
    void store_latest(StoredMessage m, bool retain = false);

    [[nodiscard]] std::shared_ptr<const StoredMessage> fetch_latest(const Topic& topic) const;
    [[nodiscard]] bool retained(const Topic& topic) const;
    [[nodiscard]] std::vector<std::shared_ptr<const StoredMessage>> history(const Topic& topic) const;
    [[nodiscard]] std::uint64_t last_sequence() const;
    [[nodiscard]] std::size_t topic_count() const;

private:
    struct Slot {
        std::deque<std::shared_ptr<const StoredMessage>> ring;
        bool retain = false;
    };

    void put(std::shared_ptr<const StoredMessage> m, bool retain);

    std::size_t depth_;
    mutable std::mutex mutex_;
    std::map<Topic, Slot> slots_;
    std::uint64_t last_sequence_ = 0;
};

/// Bounded FIFO used by every subscriber transport; overflow drops the
/// oldest entry and bumps the shared drop counter.
class DeliveryQueue {
public:
    DeliveryQueue(std::size_t capacity, std::shared_ptr<std::atomic<std::uint64_t>> drops);

    /// False when an older entry had to be dropped.
    bool push(Delivery d);
    /// Blocks until an entry is available or the queue is closed.
    std::optional<Delivery> pop();
    std::optional<Delivery> try_pop();
    void close();
    [[nodiscard]] std::size_t size() const;

private:
    std::size_t capacity_;
    std::shared_ptr<std::atomic<std::uint64_t>> drops_;
    mutable std::mutex mutex_;
    std::condition_variable ready_;
    std::deque<Delivery> items_;
    bool closed_ = false;
};

struct IngestEvent {
    Topic topic;  // raw/*
    std::string payload;
    PayloadFormat content_format = PayloadFormat::json;
    Protocol source_protocol = Protocol::coap;
    Instant arrival{};
    bool retain = false;
};

struct IngestResult {
    std::shared_ptr<const StoredMessage> stored;  // null when the event was dropped
    std::size_t delivered = 0;
    std::string error;
};

struct Counters {
    std::atomic<std::uint64_t> ingested{0};
    std::atomic<std::uint64_t> parse_errors{0};
    std::atomic<std::uint64_t> annotation_errors{0};
    std::atomic<std::uint64_t> deliveries{0};
    std::shared_ptr<std::atomic<std::uint64_t>> drops = std::make_shared<std::atomic<std::uint64_t>>(0);
    std::atomic<std::uint64_t> denied{0};
    std::atomic<std::uint64_t> dropped_publishes{0};
};

struct GatewayOptions {
    std::size_t store_history = 1;
    std::size_t subscriber_queue_capacity = 256;
};

class Gateway {
public:
    Gateway(annotation::SensorRegistry registry, annotation::DomainOntologyMap dom, GatewayOptions options = {},
            std::shared_ptr<const annotation::GraphSerializer> serializer = nullptr);

    /// parse -> annotate -> serialize -> store under the raw topic -> deliver
    /// to subscribers of the obs twin -> record the obs topic. Parse and
    /// annotation failures drop the event and bump a counter.
    IngestResult ingest(const IngestEvent& event);

    [[nodiscard]] TopicRouter& router() noexcept { return router_; }
    [[nodiscard]] const TopicRouter& router() const noexcept { return router_; }
    [[nodiscard]] MessageStore& store() noexcept { return store_; }
    [[nodiscard]] const MessageStore& store() const noexcept { return store_; }
    [[nodiscard]] Counters& counters() noexcept { return counters_; }
    [[nodiscard]] const Counters& counters() const noexcept { return counters_; }
    [[nodiscard]] const annotation::SensorRegistry& registry() const noexcept { return registry_; }
    [[nodiscard]] const annotation::DomainOntologyMap& ontology() const noexcept { return dom_; }
    [[nodiscard]] const GatewayOptions& options() const noexcept { return options_; }

    /// Fresh bounded queue wired to the gateway drop counter.
    [[nodiscard]] std::unique_ptr<DeliveryQueue> make_queue() const;

private:
    annotation::SensorRegistry registry_;
    annotation::DomainOntologyMap dom_;
    GatewayOptions options_;
    std::shared_ptr<const annotation::GraphSerializer> serializer_;
    TopicRouter router_;
    MessageStore store_;
    Counters counters_;
    std::mutex pipeline_mutex_;
};

}  // namespace sgs::proxy
