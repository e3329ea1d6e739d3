#pragma once

// MQTT 3.1.1 micro broker: southbound publishes on raw/* feed the ingest
// pipeline, northbound subscribers on obs/* receive annotated JSON-LD.

#include <atomic>
#include <functional>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "sgs/auth.hpp"
#include "sgs/mqtt.hpp"
#include "sgs/net.hpp"
#include "sgs/proxy.hpp"

namespace sgs::mqtt {

/// One connection's broker state. Acts as the router sink for its
/// subscriptions and gates every delivery on topic visibility.
class Session final : public proxy::Subscriber, public std::enable_shared_from_this<Session> {
public:
    Session(std::string connection_id, std::unique_ptr<proxy::DeliveryQueue> queue,
            const service::AccessControl& access, proxy::Counters& counters);

    void deliver(const proxy::Delivery& d) override;

    /// Next outbound PUBLISH; blocks until a delivery is queued. nullopt once closed.
    std::optional<Publish> next_publish();
    std::optional<Publish> try_next_publish();

    void close();

    [[nodiscard]] const std::string& connection_id() const noexcept { return connection_id_; }
    [[nodiscard]] const std::string& client_id() const noexcept { return client_id_; }
    [[nodiscard]] bool connected() const noexcept { return connected_; }
    [[nodiscard]] std::uint16_t keep_alive_s() const noexcept { return keep_alive_s_; }
    [[nodiscard]] std::vector<std::pair<TopicFilter, std::uint8_t>> subscriptions() const;

    /// Invoked when a newer CONNECT with the same client id takes over.
    std::function<void()> on_evict;

private:
    friend class Broker;

    Publish to_publish(const proxy::Delivery& d);

    std::string connection_id_;
    std::unique_ptr<proxy::DeliveryQueue> queue_;
    const service::AccessControl& access_;
    proxy::Counters& counters_;

    std::string client_id_;
    std::optional<std::string> token_;
    std::uint16_t keep_alive_s_ = 0;
    bool connected_ = false;

    mutable std::mutex mutex_;
    std::map<TopicFilter, std::uint8_t> subscriptions_;
    std::map<Topic, std::uint64_t> last_sequence_;  // per-topic FIFO guard
    std::uint16_t next_packet_id_ = 1;
};

struct BrokerEffects {
    std::vector<Packet> replies;
    std::vector<proxy::IngestEvent> ingests;
    std::vector<proxy::Delivery> replays;  // stored messages flagged retain
    bool close = false;
};

class Broker {
public:
    Broker(proxy::Gateway& gateway, const service::AccessControl& access);

    std::shared_ptr<Session> open_session();
    /// Protocol state machine for one inbound packet. Router changes and
    /// evictions happen here; replies, ingests and replays are returned.
    BrokerEffects handle(Session& session, const Packet& packet, Instant now);
    /// Replies are the caller's to write; this runs ingests then replays.
    void apply(Session& session, const BrokerEffects& fx);
    void close_session(Session& session);

    [[nodiscard]] std::size_t session_count() const;

private:
    BrokerEffects on_connect(Session& s, const Connect& c);
    BrokerEffects on_publish(Session& s, const Publish& p, Instant now);
    BrokerEffects on_subscribe(Session& s, const Subscribe& sub, Instant now);

    proxy::Gateway& gateway_;
    const service::AccessControl& access_;
    std::atomic<std::uint64_t> next_connection_{1};
    mutable std::mutex mutex_;
    std::map<std::string, std::weak_ptr<Session>> by_client_id_;
};

class MqttServer {
public:
    MqttServer(proxy::Gateway& gateway, const service::AccessControl& access, net::Address bind);
    ~MqttServer();
    MqttServer(const MqttServer&) = delete;
    MqttServer& operator=(const MqttServer&) = delete;

    void start();
    void stop();
    [[nodiscard]] std::uint16_t port() const noexcept { return port_; }
    [[nodiscard]] Broker& broker() noexcept { return broker_; }

private:
    struct Connection;

    void accept_loop();
    void serve(const std::shared_ptr<Connection>& c);
    void reap();

    Broker broker_;
    net::TcpListener listener_;
    std::uint16_t port_ = 0;
    std::atomic<bool> running_{false};
    std::thread acceptor_;
    std::mutex connections_mutex_;
    std::list<std::shared_ptr<Connection>> connections_;
};

}  // namespace sgs::mqtt
