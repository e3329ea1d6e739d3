#pragma once

#include <memory>
#include <string>

#include "sgs/auth.hpp"
#include "sgs/config.hpp"
#include "sgs/proxy.hpp"

namespace sgs::testing {

/// The sample gateway configuration shipped in config/, rebound to loopback
/// with ephemeral ports.
inline service::GatewayConfig sample_config() {
    auto c = service::load_config(std::string(SGS_SOURCE_DIR) + "/config/gateway.json");
    c.bind_host = "127.0.0.1";
    c.coap_port = 0;
    c.mqtt_port = 0;
    c.http_port = 0;
    return c;
}

inline std::unique_ptr<proxy::Gateway> sample_gateway() {
    auto c = sample_config();
    return std::make_unique<proxy::Gateway>(c.registry, c.ontology, c.gateway);
}

inline proxy::IngestEvent reading_event(const std::string& raw_topic, std::string payload,
                                        PayloadFormat format = PayloadFormat::json,
                                        Protocol protocol = Protocol::coap) {
    return proxy::IngestEvent{Topic::parse(raw_topic), std::move(payload), format, protocol, now_utc(), false};
}

/// Gateway pipeline plus token store and access control from the sample
/// configuration, without any network listeners.
struct Stack {
    Stack()
        : config(sample_config()),
          gateway(config.registry, config.ontology, config.gateway),
          tokens(config.clients, config.token_ttl),
          access(config.visibility, tokens) {}

    std::string token_for(const std::string& client, Instant issued = now_utc()) {
        return tokens.issue(client, client + "-secret", issued).token;
    }

    service::GatewayConfig config;
    proxy::Gateway gateway;
    service::TokenStore tokens;
    service::AccessControl access;
};

/// Sink that records everything delivered to it.
class RecordingSubscriber : public proxy::Subscriber {
public:
    void deliver(const proxy::Delivery& d) override { received.push_back(d); }
    std::vector<proxy::Delivery> received;
};

}  // namespace sgs::testing
