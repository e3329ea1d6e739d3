#include "sgs/coap_endpoint.hpp"

#include <random>

#include <spdlog/spdlog.h>

#include "sgs/annotation.hpp"
#include "sgs/error.hpp"

namespace sgs::coap {

namespace {

constexpr std::uint32_t observe_register = 0;
constexpr std::uint32_t observe_deregister = 1;
constexpr std::uint32_t observe_mask = 0xFFFFFF;

std::string hex(std::span<const std::uint8_t> bytes) {
    constexpr char digits[] = "0123456789abcdef";
    std::string out;
    for (auto b : bytes) {
        out += digits[b >> 4];
        out += digits[b & 0xF];
    }
    return out;
}

std::string observer_key(const std::string& remote, std::span<const std::uint8_t> token) {
    return remote + "#" + hex(token);
}

Bytes to_bytes(std::string_view s) {
    return {s.begin(), s.end()};
}

}  // namespace

std::uint32_t content_format_for(std::string_view payload) {
    return annotation::sniff_format(payload) == PayloadFormat::xml ? content_format::xml : content_format::json;
}

RequestOutcome handle_request(const Message& request, const std::string& remote, const proxy::MessageStore& store,
                              const PrivacyCheck& is_private, std::uint16_t response_mid, Instant now) {
    RequestOutcome out;
    auto& resp = out.response;
    resp.type = request.type == MessageType::con ? MessageType::ack : MessageType::non;
    resp.message_id = request.type == MessageType::con ? request.message_id : response_mid;
    resp.token = request.token;

    auto reply = [&](Code code) -> RequestOutcome& {
        resp.code = code;
        return out;
    };

    for (const auto& o : request.options) {
        const bool understood =
            o.number == option::observe || o.number == option::uri_path || o.number == option::content_format;
        if (!understood && option::is_critical(o.number)) {
            resp.payload = to_bytes("unsupported critical option " + std::to_string(o.number));
            return reply(codes::bad_option);
        }
    }

    if (request.code != codes::get && request.code != codes::post) return reply(codes::method_not_allowed);

    std::optional<Topic> topic;
    try {
        topic = topic_from_uri_path(request.uri_path());
    } catch (const Error& e) {
        resp.payload = to_bytes(e.what());
        return reply(codes::bad_request);
    }

    if (request.code == codes::post) {
        if (request.payload.empty()) {
            resp.payload = to_bytes("POST requires a payload");
            return reply(codes::bad_request);
        }
        std::string payload(request.payload.begin(), request.payload.end());
        PayloadFormat format = annotation::sniff_format(payload);
        if (const auto cf = request.uint_option(option::content_format)) {
            if (*cf == content_format::json) {
                format = PayloadFormat::json;
            } else if (*cf == content_format::xml) {
                format = PayloadFormat::xml;
            } else {
                return reply(codes::unsupported_content_format);
            }
        }
        out.effects.ingest = proxy::IngestEvent{*topic, std::move(payload), format, Protocol::coap, now};
        return reply(codes::changed);
    }

    // GET
    if (is_private && is_private(north_topic_for(*topic))) return reply(codes::unauthorized);
    const auto observe = request.uint_option(option::observe);
    if (observe == observe_deregister) out.effects.deregister = true;

    const auto stored = store.fetch_latest(*topic);
    if (!stored) return reply(codes::not_found);

    resp.payload = to_bytes(stored->raw_payload);
    if (observe == observe_register) {
        resp.add_uint_option(option::observe, 0);
        out.effects.observe = ObserveRegistration{remote, request.token, *topic, 1};
    }
    resp.add_uint_option(option::content_format, content_format_for(stored->raw_payload));
    return reply(codes::content);
}

// ---------------------------------------------------------------------------

class CoapServer::Observer final : public proxy::Subscriber {
public:
    Observer(CoapServer& server, std::string key, net::Address remote, ObserveRegistration reg)
        : server_(server),
          key_(std::move(key)),
          remote_(std::move(remote)),
          registration_(std::move(reg)),
          queue_(server.gateway_.make_queue()) {}

    void deliver(const proxy::Delivery& d) override {
        queue_->push(d);
        server_.wake_notifier();
    }

    // Drains the queue into NON 2.05 notifications.
    void flush() {
        while (auto d = queue_->try_pop()) {
            Message m;
            m.type = MessageType::non;
            m.code = codes::content;
            m.token = registration_.token;
            m.message_id = server_.next_message_id();
            m.add_uint_option(option::observe, registration_.next_notification_sequence++ & observe_mask);
            m.add_uint_option(option::content_format, content_format::json);
            m.payload = Bytes(d->payload->begin(), d->payload->end());
            last_mid_.store(m.message_id);
            server_.send(m, remote_);
        }
    }

    void close() { queue_->close(); }

    [[nodiscard]] const std::string& key() const noexcept { return key_; }
    [[nodiscard]] const net::Address& remote() const noexcept { return remote_; }
    [[nodiscard]] const ObserveRegistration& registration() const noexcept { return registration_; }
    [[nodiscard]] std::uint16_t last_mid() const noexcept { return last_mid_.load(); }

private:
    CoapServer& server_;
    std::string key_;
    net::Address remote_;
    ObserveRegistration registration_;
    std::unique_ptr<proxy::DeliveryQueue> queue_;
    std::atomic<std::uint16_t> last_mid_{0};
};

CoapServer::CoapServer(proxy::Gateway& gateway, const service::AccessControl& access, net::Address bind)
    : gateway_(gateway),
      access_(access),
      socket_(net::UdpSocket::bind(bind)),
      port_(socket_.local_port()),
      mid_(std::random_device{}() & 0xFFFF) {}

CoapServer::~CoapServer() {
    stop();
}

void CoapServer::start() {
    if (running_.exchange(true)) return;
    receiver_ = std::thread([this] { receive_loop(); });
    notifier_ = std::thread([this] { notify_loop(); });
    spdlog::info("CoAP endpoint listening on udp/{}", port_);
}

void CoapServer::stop() {
    if (!running_.exchange(false)) return;
    wake_notifier();
    if (receiver_.joinable()) receiver_.join();
    if (notifier_.joinable()) notifier_.join();
    std::lock_guard lock(observers_mutex_);
    for (auto& [key, obs] : observers_) {
        gateway_.router().remove_subscriber("coap:" + key);
        obs->close();
    }
    observers_.clear();
}

std::size_t CoapServer::observer_count() const {
    std::lock_guard lock(observers_mutex_);
    return observers_.size();
}

void CoapServer::wake_notifier() {
    {
        std::lock_guard lock(wake_mutex_);
        pending_ = true;
    }
    wake_.notify_one();
}

void CoapServer::send(const Message& m, const net::Address& to) {
    try {
        socket_.send_to(encode(m), to);
    } catch (const Error& e) {
        spdlog::warn("CoAP send to {} failed: {}", to.str(), e.what());
    }
}

void CoapServer::receive_loop() {
    while (running_) {
        try {
            auto datagram = socket_.receive(net::Millis{100});
            if (!datagram) continue;
            on_datagram(datagram->first, datagram->second);
        } catch (const std::exception& e) {
            spdlog::error("CoAP receive loop: {}", e.what());
        }
    }
}

void CoapServer::notify_loop() {
    while (running_) {
        {
            std::unique_lock lock(wake_mutex_);
            wake_.wait_for(lock, std::chrono::milliseconds{100}, [&] { return pending_ || !running_; });
            pending_ = false;
        }
        std::vector<std::shared_ptr<Observer>> snapshot;
        {
            std::lock_guard lock(observers_mutex_);
            for (const auto& [_, o] : observers_) snapshot.push_back(o);
        }
        for (auto& o : snapshot) o->flush();
    }
}

void CoapServer::on_datagram(const Bytes& datagram, const net::Address& from) {
    Message request;
    try {
        request = decode(datagram);
    } catch (const Error& e) {
        spdlog::debug("malformed CoAP datagram from {}: {}", from.str(), e.what());
        // A decodable CON header gets a Reset so the client stops retrying.
        if (datagram.size() >= 4 && (datagram[0] >> 6) == 1 && ((datagram[0] >> 4) & 0x3) == 0) {
            Message rst;
            rst.type = MessageType::rst;
            rst.message_id = static_cast<std::uint16_t>((datagram[2] << 8) | datagram[3]);
            send(rst, from);
        }
        return;
    }

    const auto remote = from.str();
    if (request.type == MessageType::rst) {
        std::string stale;
        {
            std::lock_guard lock(observers_mutex_);
            for (const auto& [key, o] : observers_)
                if (o->remote() == from && o->last_mid() == request.message_id) stale = key;
        }
        if (!stale.empty()) deregister_observer(stale);
        return;
    }
    if (request.type == MessageType::ack) return;
    if (request.code.is_empty()) {
        if (request.type == MessageType::con) {
            Message rst;
            rst.type = MessageType::rst;
            rst.message_id = request.message_id;
            send(rst, from);
        }
        return;
    }
    if (!request.code.is_request()) return;

    RequestOutcome outcome;
    try {
        const PrivacyCheck is_private = [&](const Topic& north) {
            return access_.visibility().visibility(north) == Visibility::private_;
        };
        outcome = handle_request(request, remote, gateway_.store(), is_private, next_message_id(), now_utc());
    } catch (const std::exception& e) {
        spdlog::error("CoAP request from {} failed: {}", remote, e.what());
        outcome.response.type = request.type == MessageType::con ? MessageType::ack : MessageType::non;
        outcome.response.message_id = request.type == MessageType::con ? request.message_id : next_message_id();
        outcome.response.token = request.token;
        outcome.response.code = codes::internal_server_error;
    }

    auto& fx = outcome.effects;
    if (fx.ingest) gateway_.ingest(*fx.ingest);
    if (fx.deregister) deregister_observer(observer_key(remote, request.token));
    send(outcome.response, from);
    if (fx.observe) register_observer(*fx.observe, from);
}

void CoapServer::register_observer(const ObserveRegistration& reg, const net::Address& from) {
    const auto key = observer_key(reg.remote, reg.token);
    deregister_observer(key);
    auto observer = std::make_shared<Observer>(*this, key, from, reg);
    const auto north = north_topic_for(reg.topic);
    {
        std::lock_guard lock(observers_mutex_);
        observers_[key] = observer;
    }
    gateway_.router().subscribe(
        proxy::Subscription{"coap:" + key, TopicFilter(north.segments()), 0, proxy::Transport::coap_observe},
        observer);
}

void CoapServer::deregister_observer(const std::string& key) {
    std::shared_ptr<Observer> removed;
    {
        std::lock_guard lock(observers_mutex_);
        const auto it = observers_.find(key);
        if (it == observers_.end()) return;
        removed = std::move(it->second);
        observers_.erase(it);
    }
    gateway_.router().remove_subscriber("coap:" + key);
    removed->close();
}

}  // namespace sgs::coap
