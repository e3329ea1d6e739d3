#pragma once

// Southbound CoAP endpoint: POST ingests sensor readings, GET serves the
// latest raw payload from the message store, Observe=0 registers for
// annotated notifications.

#include <atomic>
#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "sgs/auth.hpp"
#include "sgs/coap.hpp"
#include "sgs/net.hpp"
#include "sgs/proxy.hpp"

namespace sgs::coap {

struct ObserveRegistration {
    std::string remote;
    Bytes token;
    Topic topic;  // raw topic of the observed resource
    std::uint32_t next_notification_sequence = 1;
};

struct RequestEffects {
    std::optional<proxy::IngestEvent> ingest;
    std::optional<ObserveRegistration> observe;
    bool deregister = false;
};

struct RequestOutcome {
    Message response;
    RequestEffects effects;
};

/// Returns true when the obs/* twin of a resource is private.
using PrivacyCheck = std::function<bool(const Topic& north)>;

/// Request handling without I/O. `response_mid` is used for NON responses;
/// CON requests are answered with a piggybacked ACK carrying the request's
/// message id.
RequestOutcome handle_request(const Message& request, const std::string& remote, const proxy::MessageStore& store,
                              const PrivacyCheck& is_private, std::uint16_t response_mid, Instant now);

/// Content-Format number for a payload, by sniffing.
std::uint32_t content_format_for(std::string_view payload);

class CoapServer {
public:
    CoapServer(proxy::Gateway& gateway, const service::AccessControl& access, net::Address bind);
    ~CoapServer();
    CoapServer(const CoapServer&) = delete;
    CoapServer& operator=(const CoapServer&) = delete;

    void start();
    void stop();
    [[nodiscard]] std::uint16_t port() const noexcept { return port_; }
    [[nodiscard]] std::size_t observer_count() const;

private:
    class Observer;

    void receive_loop();
    void notify_loop();
    void on_datagram(const Bytes& datagram, const net::Address& from);
    void register_observer(const ObserveRegistration& reg, const net::Address& from);
    void deregister_observer(const std::string& key);
    void send(const Message& m, const net::Address& to);
    std::uint16_t next_message_id() noexcept { return static_cast<std::uint16_t>(mid_.fetch_add(1)); }
    void wake_notifier();

    proxy::Gateway& gateway_;
    const service::AccessControl& access_;
    net::UdpSocket socket_;
    std::uint16_t port_ = 0;
    std::atomic<bool> running_{false};
    std::atomic<std::uint32_t> mid_;
    std::thread receiver_;
    std::thread notifier_;

    mutable std::mutex observers_mutex_;
    std::map<std::string, std::shared_ptr<Observer>> observers_;

    std::mutex wake_mutex_;
    std::condition_variable wake_;
    bool pending_ = false;
};

}  // namespace sgs::coap
