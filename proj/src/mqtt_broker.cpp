#include "sgs/mqtt_broker.hpp"

#include <spdlog/spdlog.h>

#include "sgs/error.hpp"

namespace sgs::mqtt {

namespace {

constexpr std::uint8_t connack_identifier_rejected = 2;
constexpr auto connect_deadline = std::chrono::seconds{10};

}  // namespace

Session::Session(std::string connection_id, std::unique_ptr<proxy::DeliveryQueue> queue,
                 const service::AccessControl& access, proxy::Counters& counters)
    : connection_id_(std::move(connection_id)), queue_(std::move(queue)), access_(access), counters_(counters) {}

void Session::deliver(const proxy::Delivery& d) {
    if (!access_.authorize(token_, d.topic, now_utc())) {
        ++counters_.denied;
        return;
    }
    std::lock_guard lock(mutex_);
    auto& last = last_sequence_[d.topic];
    if (d.sequence <= last) return;
    last = d.sequence;
    queue_->push(d);
}

Publish Session::to_publish(const proxy::Delivery& d) {
    Publish p{d.topic, 0, d.retain, false, std::nullopt, Bytes(d.payload->begin(), d.payload->end())};
    std::lock_guard lock(mutex_);
    for (const auto& [filter, qos] : subscriptions_)
        if (proxy::matches(filter, d.topic)) p.qos = std::max(p.qos, qos);
    if (p.qos > 0) {
        if (next_packet_id_ == 0) next_packet_id_ = 1;
        p.packet_id = next_packet_id_++;
    }
    return p;
}

std::optional<Publish> Session::next_publish() {
    auto d = queue_->pop();
    if (!d) return std::nullopt;
    return to_publish(*d);
}

std::optional<Publish> Session::try_next_publish() {
    auto d = queue_->try_pop();
    if (!d) return std::nullopt;
    return to_publish(*d);
}

void Session::close() {
    queue_->close();
}

std::vector<std::pair<TopicFilter, std::uint8_t>> Session::subscriptions() const {
    std::lock_guard lock(mutex_);
    return {subscriptions_.begin(), subscriptions_.end()};
}

// ---------------------------------------------------------------------------

Broker::Broker(proxy::Gateway& gateway, const service::AccessControl& access) : gateway_(gateway), access_(access) {}

std::shared_ptr<Session> Broker::open_session() {
    return std::make_shared<Session>("mqtt#" + std::to_string(next_connection_++), gateway_.make_queue(), access_,
                                     gateway_.counters());
}

BrokerEffects Broker::handle(Session& s, const Packet& packet, Instant now) {
    BrokerEffects fx;
    if (!s.connected_) {
        if (const auto* c = std::get_if<Connect>(&packet)) return on_connect(s, *c);
        spdlog::info("{}: {} before CONNECT, closing", s.connection_id(), packet_name(packet));
        fx.close = true;
        return fx;
    }
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, Publish>) {
                fx = on_publish(s, p, now);
            } else if constexpr (std::is_same_v<T, Subscribe>) {
                fx = on_subscribe(s, p, now);
            } else if constexpr (std::is_same_v<T, Unsubscribe>) {
                for (const auto& f : p.filters) {
                    gateway_.router().unsubscribe(s.connection_id(), f);
                    std::lock_guard lock(s.mutex_);
                    s.subscriptions_.erase(f);
                }
                fx.replies.emplace_back(Unsuback{p.packet_id});
            } else if constexpr (std::is_same_v<T, Puback>) {
                // Outbound QoS 1 is not retransmitted; nothing to release.
            } else if constexpr (std::is_same_v<T, Pingreq>) {
                fx.replies.emplace_back(Pingresp{});
            } else if constexpr (std::is_same_v<T, Disconnect>) {
                fx.close = true;
            } else {
                spdlog::info("{}: unexpected {}, closing", s.connection_id(), packet_name(packet));
                fx.close = true;
            }
        },
        packet);
    return fx;
}

BrokerEffects Broker::on_connect(Session& s, const Connect& c) {
    BrokerEffects fx;
    std::string client_id = c.client_id;
    if (client_id.empty()) {
        if (!c.clean_session) {
            fx.replies.emplace_back(Connack{false, connack_identifier_rejected});
            fx.close = true;
            return fx;
        }
        client_id = "auto-" + s.connection_id().substr(s.connection_id().find('#') + 1);
    }
    s.client_id_ = client_id;
    s.token_ = c.password;
    s.keep_alive_s_ = c.keep_alive_s;
    s.connected_ = true;

    std::shared_ptr<Session> evicted;
    {
        std::lock_guard lock(mutex_);
        auto& slot = by_client_id_[client_id];
        evicted = slot.lock();
        slot = s.weak_from_this();
    }
    if (evicted && evicted.get() != &s) {
        spdlog::info("client '{}' reconnected, evicting {}", client_id, evicted->connection_id());
        gateway_.router().remove_subscriber(evicted->connection_id());
        evicted->close();
        if (evicted->on_evict) evicted->on_evict();
    }
    fx.replies.emplace_back(Connack{false, 0});
    return fx;
}

BrokerEffects Broker::on_publish(Session& s, const Publish& p, Instant now) {
    BrokerEffects fx;
    if (p.qos == 1 && p.packet_id) fx.replies.emplace_back(Puback{*p.packet_id});
    if (p.topic.front() == "raw") {
        std::string payload(p.payload.begin(), p.payload.end());
        const auto format = annotation::sniff_format(payload);
        fx.ingests.push_back(proxy::IngestEvent{p.topic, std::move(payload), format, Protocol::mqtt, now, p.retain});
    } else {
        ++gateway_.counters().dropped_publishes;
        spdlog::warn("audit: client '{}' published to non-raw topic '{}', dropped", s.client_id(), p.topic.str());
    }
    return fx;
}

BrokerEffects Broker::on_subscribe(Session& s, const Subscribe& sub, Instant now) {
    BrokerEffects fx;
    Suback ack{sub.packet_id, {}};
    for (const auto& entry : sub.filters) {
        const auto decision = access_.authorize_filter(s.token_, entry.filter, now);
        if (!decision) {
            ++gateway_.counters().denied;
            spdlog::info("client '{}' denied subscription '{}': {}", s.client_id(), entry.filter.str(),
                         service::to_string(*decision.reason));
            ack.granted.push_back(suback_failure);
            continue;
        }
        const std::uint8_t granted = std::min<std::uint8_t>(entry.requested_qos, 1);
        {
            std::lock_guard lock(s.mutex_);
            s.subscriptions_[entry.filter] = granted;
        }
        gateway_.router().subscribe(proxy::Subscription{s.connection_id(), entry.filter, granted,
                                                        proxy::Transport::mqtt},
                                    s.weak_from_this());
        ack.granted.push_back(granted);

        for (const auto& topic : gateway_.router().known_topics()) {
            if (!proxy::matches(entry.filter, topic)) continue;
            const auto raw = raw_topic_for(topic);
            if (!gateway_.store().retained(raw)) continue;
            if (const auto stored = gateway_.store().fetch_latest(raw)) {
                fx.replays.push_back(proxy::Delivery{
                    topic, std::make_shared<const std::string>(stored->annotated_jsonld), stored->sequence, true});
            }
        }
    }
    fx.replies.emplace_back(std::move(ack));
    return fx;
}

void Broker::apply(Session& session, const BrokerEffects& fx) {
    for (const auto& e : fx.ingests) gateway_.ingest(e);
    for (const auto& d : fx.replays) session.deliver(d);
}

void Broker::close_session(Session& s) {
    gateway_.router().remove_subscriber(s.connection_id());
    {
        std::lock_guard lock(mutex_);
        const auto it = by_client_id_.find(s.client_id());
        if (it != by_client_id_.end()) {
            const auto current = it->second.lock();
            if (!current || current.get() == &s) by_client_id_.erase(it);
        }
    }
    s.close();
}

std::size_t Broker::session_count() const {
    std::lock_guard lock(mutex_);
    std::size_t n = 0;
    for (const auto& [_, w] : by_client_id_) n += w.expired() ? 0 : 1;
    return n;
}

// ---------------------------------------------------------------------------

struct MqttServer::Connection {
    std::shared_ptr<Session> session;
    net::TcpStream stream;
    net::Address peer;
    std::mutex write_mutex;
    std::thread reader;
    std::atomic<bool> done{false};

    bool write(const Packet& p) {
        const auto bytes = encode(p);
        std::lock_guard lock(write_mutex);
        try {
            stream.write_all(bytes);
            return true;
        } catch (const Error&) {
            return false;
        }
    }
};

MqttServer::MqttServer(proxy::Gateway& gateway, const service::AccessControl& access, net::Address bind)
    : broker_(gateway, access), listener_(net::TcpListener::bind(bind)), port_(listener_.local_port()) {}

MqttServer::~MqttServer() {
    stop();
}

void MqttServer::start() {
    if (running_.exchange(true)) return;
    acceptor_ = std::thread([this] { accept_loop(); });
    spdlog::info("MQTT broker listening on tcp/{}", port_);
}

void MqttServer::stop() {
    if (!running_.exchange(false)) return;
    if (acceptor_.joinable()) acceptor_.join();
    std::list<std::shared_ptr<Connection>> all;
    {
        std::lock_guard lock(connections_mutex_);
        all.swap(connections_);
    }
    for (auto& c : all) c->stream.shutdown();
    for (auto& c : all)
        if (c->reader.joinable()) c->reader.join();
}

void MqttServer::reap() {
    std::lock_guard lock(connections_mutex_);
    for (auto it = connections_.begin(); it != connections_.end();) {
        if ((*it)->done) {
            if ((*it)->reader.joinable()) (*it)->reader.join();
            it = connections_.erase(it);
        } else {
            ++it;
        }
    }
}

void MqttServer::accept_loop() {
    while (running_) {
        try {
            auto accepted = listener_.accept(net::Millis{100});
            reap();
            if (!accepted) continue;
            auto c = std::make_shared<Connection>();
            c->stream = std::move(accepted->first);
            c->peer = accepted->second;
            c->session = broker_.open_session();
            std::weak_ptr<Connection> weak = c;
            c->session->on_evict = [weak] {
                if (auto conn = weak.lock()) conn->stream.shutdown();
            };
            std::lock_guard lock(connections_mutex_);
            connections_.push_back(c);
            c->reader = std::thread([this, c] { serve(c); });
        } catch (const std::exception& e) {
            spdlog::error("MQTT accept loop: {}", e.what());
        }
    }
}

void MqttServer::serve(const std::shared_ptr<Connection>& c) {
    auto& session = *c->session;
    std::thread writer([c] {
        while (auto p = c->session->next_publish()) {
            if (!c->write(*p)) break;
        }
    });

    Bytes buffer;
    std::array<std::uint8_t, 16384> chunk{};
    auto last_activity = std::chrono::steady_clock::now();
    const auto opened = last_activity;
    bool open = true;
    while (open && running_) {
        std::optional<std::size_t> n;
        try {
            n = c->stream.read_some(chunk, net::Millis{250});
        } catch (const Error&) {
            break;
        }
        const auto now = std::chrono::steady_clock::now();
        if (!n) {
            if (!session.connected() && now - opened > connect_deadline) break;
            const auto ka = session.keep_alive_s();
            if (session.connected() && ka > 0 && now - last_activity > std::chrono::milliseconds{ka * 1500}) {
                spdlog::info("client '{}' keep-alive expired", session.client_id());
                break;
            }
            continue;
        }
        if (*n == 0) break;
        last_activity = now;
        buffer.insert(buffer.end(), chunk.begin(), chunk.begin() + static_cast<std::ptrdiff_t>(*n));

        std::size_t offset = 0;
        while (open) {
            std::optional<Decoded> decoded;
            try {
                decoded = decode(std::span(buffer).subspan(offset));
            } catch (const Error& e) {
                spdlog::info("{} from {}: {}", session.connection_id(), c->peer.str(), e.what());
                open = false;
                break;
            }
            if (!decoded) break;
            offset += decoded->bytes_consumed;
            const auto fx = broker_.handle(session, decoded->packet, now_utc());
            for (const auto& reply : fx.replies) {
                if (!c->write(reply)) open = false;
            }
            broker_.apply(session, fx);
            if (fx.close) open = false;
        }
        buffer.erase(buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(offset));
    }

    broker_.close_session(session);
    c->stream.shutdown();
    writer.join();
    c->done = true;
}

}  // namespace sgs::mqtt
