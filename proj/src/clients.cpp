#include "sgs/clients.hpp"

#include <random>

#include "sgs/error.hpp"

namespace sgs::sim {

namespace {

std::vector<std::string> split_path(std::string_view path) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start < path.size()) {
        auto slash = path.find('/', start);
        if (slash == std::string_view::npos) slash = path.size();
        if (slash > start) out.emplace_back(path.substr(start, slash - start));
        start = slash + 1;
    }
    return out;
}

template <typename T>
std::uint8_t kind_of() {
    return static_cast<std::uint8_t>(mqtt::Packet(T{}).index());
}

std::uint16_t packet_id_of(const mqtt::Packet& p) {
    return std::visit(
        [](const auto& v) -> std::uint16_t {
            if constexpr (requires { v.packet_id; }) {
                if constexpr (std::is_same_v<std::decay_t<decltype(v.packet_id)>, std::uint16_t>) return v.packet_id;
            }
            return 0;
        },
        p);
}

}  // namespace

CoapClient::CoapClient(net::Address server)
    : server_(std::move(server)), socket_(net::UdpSocket::open_for(server_)) {
    std::random_device rd;
    next_mid_ = static_cast<std::uint16_t>(rd());
    next_token_ = rd();
}

void CoapClient::send(const coap::Message& m) {
    socket_.send_to(coap::encode(m), server_);
}

std::optional<coap::Message> CoapClient::receive(net::Millis timeout) {
    const auto got = socket_.receive(timeout);
    if (!got) return std::nullopt;
    try {
        return coap::decode(got->first);
    } catch (const Error&) {
        return std::nullopt;
    }
}

coap::Message CoapClient::request(coap::Message req, net::Millis ack_timeout, int max_retransmit) {
    if (req.message_id == 0) req.message_id = next_mid_++;
    if (req.token.empty()) {
        const auto t = next_token_++;
        req.token = {static_cast<std::uint8_t>(t >> 24), static_cast<std::uint8_t>(t >> 16),
                     static_cast<std::uint8_t>(t >> 8), static_cast<std::uint8_t>(t)};
    }
    const bool confirmable = req.type == coap::MessageType::con;
    const auto bytes = coap::encode(req);
    auto timeout = ack_timeout;
    bool acknowledged = false;  // empty ACK seen, separate response pending

    for (int attempt = 0; attempt <= max_retransmit; ++attempt) {
        if (!acknowledged) socket_.send_to(bytes, server_);
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        while (true) {
            const auto left = std::chrono::duration_cast<net::Millis>(deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0) break;
            auto m = receive(left);
            if (!m) continue;
            const bool same_exchange = m->message_id == req.message_id &&
                                       (m->type == coap::MessageType::ack || m->type == coap::MessageType::rst);
            if (same_exchange && m->type == coap::MessageType::rst)
                throw Error(ErrorCode::GatewayUnreachable, "request reset by " + server_.str());
            if (same_exchange && m->code.is_empty()) {
                acknowledged = true;
                continue;
            }
            if (m->token == req.token && !m->code.is_request() && !m->code.is_empty() &&
                (same_exchange || m->type != coap::MessageType::ack)) {
                if (m->type == coap::MessageType::con) {
                    coap::Message ack;
                    ack.type = coap::MessageType::ack;
                    ack.message_id = m->message_id;
                    send(ack);
                }
                return *m;
            }
            unsolicited_.push_back(std::move(*m));
        }
        if (!confirmable && !acknowledged) break;
        timeout *= 2;
    }
    throw Error(ErrorCode::GatewayUnreachable, "no CoAP response from " + server_.str());
}

coap::Message CoapClient::post(std::string_view path, std::string_view payload,
                               std::optional<std::uint32_t> content_format, bool confirmable) {
    coap::Message m;
    m.type = confirmable ? coap::MessageType::con : coap::MessageType::non;
    m.code = coap::codes::post;
    m.set_uri_path(split_path(path));
    if (content_format) m.add_uint_option(coap::option::content_format, *content_format);
    m.payload = Bytes(payload.begin(), payload.end());
    return request(std::move(m));
}

coap::Message CoapClient::get(std::string_view path, std::optional<std::uint32_t> observe) {
    coap::Message m;
    m.type = coap::MessageType::con;
    m.code = coap::codes::get;
    m.set_uri_path(split_path(path));
    if (observe) m.add_uint_option(coap::option::observe, *observe);
    return request(std::move(m));
}

std::optional<coap::Message> CoapClient::next_notification(net::Millis timeout) {
    if (unsolicited_.empty()) {
        if (auto m = receive(timeout)) unsolicited_.push_back(std::move(*m));
    }
    if (unsolicited_.empty()) return std::nullopt;
    auto m = std::move(unsolicited_.front());
    unsolicited_.pop_front();
    return m;
}

// ---------------------------------------------------------------------------

MqttClient::MqttClient(const net::Address& broker, std::string client_id, std::optional<std::string> password,
                       Handler on_publish, std::uint16_t keep_alive_s)
    : stream_(net::TcpStream::connect(broker)),
      on_publish_(std::move(on_publish)),
      keep_alive_s_(keep_alive_s),
      last_send_(std::chrono::steady_clock::now()) {
    reader_ = std::thread([this] { reader_loop(); });
    mqtt::Connect c;
    c.client_id = std::move(client_id);
    c.keep_alive_s = keep_alive_s;
    c.password = std::move(password);
    if (c.password) c.username = c.client_id;
    try {
        send(c);
        const auto ack = std::get<mqtt::Connack>(await(kind_of<mqtt::Connack>(), 0, net::Millis{5000}));
        if (ack.return_code != 0)
            throw Error(ErrorCode::Io, "broker refused connection, code " + std::to_string(ack.return_code));
    } catch (...) {
        stream_.shutdown();
        reader_.join();
        throw;
    }
}

MqttClient::~MqttClient() {
    disconnect();
}

bool MqttClient::connected() const {
    std::lock_guard lock(mutex_);
    return !closed_;
}

void MqttClient::disconnect() {
    if (!reader_.joinable()) return;
    if (connected()) {
        try {
            send(mqtt::Disconnect{});
        } catch (const Error&) {
        }
    }
    stream_.shutdown();
    reader_.join();
}

void MqttClient::send(const mqtt::Packet& p) {
    const auto bytes = mqtt::encode(p);
    std::lock_guard lock(write_mutex_);
    stream_.write_all(bytes);
    last_send_ = std::chrono::steady_clock::now();
}

std::uint16_t MqttClient::next_packet_id() {
    std::lock_guard lock(mutex_);
    if (++packet_id_ == 0) packet_id_ = 1;
    return packet_id_;
}

mqtt::Packet MqttClient::await(std::uint8_t kind, std::uint16_t packet_id, net::Millis timeout) {
    std::unique_lock lock(mutex_);
    const auto key = std::make_pair(kind, packet_id);
    if (!cv_.wait_for(lock, timeout, [&] { return acks_.contains(key) || closed_; }))
        throw Error(ErrorCode::Io, "timed out waiting for broker acknowledgement");
    const auto it = acks_.find(key);
    if (it == acks_.end()) throw Error(ErrorCode::Io, "broker closed the connection");
    auto p = std::move(it->second);
    acks_.erase(it);
    return p;
}

std::vector<std::uint8_t> MqttClient::subscribe(const std::vector<std::pair<std::string, std::uint8_t>>& filters) {
    mqtt::Subscribe s;
    s.packet_id = next_packet_id();
    for (const auto& [f, q] : filters) s.filters.push_back({parse_topic_filter(f), q});
    send(s);
    return std::get<mqtt::Suback>(await(kind_of<mqtt::Suback>(), s.packet_id, net::Millis{5000})).granted;
}

void MqttClient::unsubscribe(const std::vector<std::string>& filters) {
    mqtt::Unsubscribe u;
    u.packet_id = next_packet_id();
    for (const auto& f : filters) u.filters.push_back(parse_topic_filter(f));
    send(u);
    await(kind_of<mqtt::Unsuback>(), u.packet_id, net::Millis{5000});
}

void MqttClient::publish(const std::string& topic, std::string_view payload, std::uint8_t qos, bool retain) {
    mqtt::Publish p{Topic::parse(topic), qos, retain, false, std::nullopt, Bytes(payload.begin(), payload.end())};
    if (qos > 0) p.packet_id = next_packet_id();
    send(p);
    if (qos > 0) await(kind_of<mqtt::Puback>(), *p.packet_id, net::Millis{5000});
}

void MqttClient::reader_loop() {
    Bytes buffer;
    std::array<std::uint8_t, 16384> chunk{};
    const auto ping_every = std::chrono::milliseconds{keep_alive_s_ * 500};
    while (true) {
        std::optional<std::size_t> n;
        try {
            n = stream_.read_some(chunk, net::Millis{250});
        } catch (const Error&) {
            break;
        }
        // Inbound traffic does not count as activity on our side of the link.
        bool idle = false;
        {
            std::lock_guard lock(write_mutex_);
            idle = std::chrono::steady_clock::now() - last_send_ > ping_every;
        }
        if (keep_alive_s_ > 0 && idle) {
            try {
                send(mqtt::Pingreq{});
            } catch (const Error&) {
                break;
            }
        }
        if (!n) continue;
        if (*n == 0) break;
        buffer.insert(buffer.end(), chunk.begin(), chunk.begin() + static_cast<std::ptrdiff_t>(*n));
        std::size_t offset = 0;
        bool broken = false;
        while (true) {
            std::optional<mqtt::Decoded> d;
            try {
                d = mqtt::decode(std::span(buffer).subspan(offset));
            } catch (const Error&) {
                broken = true;
                break;
            }
            if (!d) break;
            offset += d->bytes_consumed;
            if (auto* pub = std::get_if<mqtt::Publish>(&d->packet)) {
                if (on_publish_) on_publish_(*pub);
                if (pub->qos == 1 && pub->packet_id) {
                    try {
                        send(mqtt::Puback{*pub->packet_id});
                    } catch (const Error&) {
                        broken = true;
                        break;
                    }
                }
                continue;
            }
            if (std::holds_alternative<mqtt::Pingresp>(d->packet)) continue;
            std::lock_guard lock(mutex_);
            acks_[{static_cast<std::uint8_t>(d->packet.index()), packet_id_of(d->packet)}] = std::move(d->packet);
            cv_.notify_all();
        }
        if (broken) break;
        buffer.erase(buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(offset));
    }
    std::lock_guard lock(mutex_);
    closed_ = true;
    cv_.notify_all();
}

}  // namespace sgs::sim
