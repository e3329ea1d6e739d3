#pragma once

// Blocking CoAP and MQTT clients for virtual sensors and subscribers.

#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "sgs/coap.hpp"
#include "sgs/mqtt.hpp"
#include "sgs/net.hpp"

namespace sgs::sim {

class CoapClient {
public:
    explicit CoapClient(net::Address server);

    /// Sends `request` (message id and token are filled in when empty) and
    /// waits for the matching response. CON requests are retransmitted with
    /// exponential back-off. Throws GatewayUnreachable when no response arrives.
    coap::Message request(coap::Message request, net::Millis ack_timeout = net::Millis{2000},
                          int max_retransmit = 4);

    coap::Message post(std::string_view path, std::string_view payload, std::optional<std::uint32_t> content_format,
                       bool confirmable = true);
    coap::Message get(std::string_view path, std::optional<std::uint32_t> observe = std::nullopt);

    /// Unsolicited messages (Observe notifications) received so far or within `timeout`.
    std::optional<coap::Message> next_notification(net::Millis timeout);
    void send(const coap::Message& m);

private:
    std::optional<coap::Message> receive(net::Millis timeout);

    net::Address server_;
    net::UdpSocket socket_;
    std::uint16_t next_mid_;
    std::uint32_t next_token_;
    std::deque<coap::Message> unsolicited_;
};

class MqttClient {
public:
    using Handler = std::function<void(const mqtt::Publish&)>;

    /// Connects and waits for CONNACK. Throws GatewayUnreachable, or Io when
    /// the broker refuses the connection.
    MqttClient(const net::Address& broker, std::string client_id, std::optional<std::string> password = std::nullopt,
               Handler on_publish = {}, std::uint16_t keep_alive_s = 30);
    ~MqttClient();
    MqttClient(const MqttClient&) = delete;
    MqttClient& operator=(const MqttClient&) = delete;

    /// Granted QoS per filter, 0x80 for refused ones.
    std::vector<std::uint8_t> subscribe(const std::vector<std::pair<std::string, std::uint8_t>>& filters);
    void unsubscribe(const std::vector<std::string>& filters);
    /// QoS 1 waits for the PUBACK.
    void publish(const std::string& topic, std::string_view payload, std::uint8_t qos = 0, bool retain = false);
    void disconnect();

    /// False once the broker has closed the connection.
    [[nodiscard]] bool connected() const;

private:
    void reader_loop();
    void send(const mqtt::Packet& p);
    mqtt::Packet await(std::uint8_t kind, std::uint16_t packet_id, net::Millis timeout);
    std::uint16_t next_packet_id();

    net::TcpStream stream_;
    Handler on_publish_;
    std::uint16_t keep_alive_s_;
    std::mutex write_mutex_;
    std::chrono::steady_clock::time_point last_send_;

    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::map<std::pair<std::uint8_t, std::uint16_t>, mqtt::Packet> acks_;
    bool closed_ = false;
    std::uint16_t packet_id_ = 0;
    std::thread reader_;
};

}  // namespace sgs::sim
