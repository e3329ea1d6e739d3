#pragma once

// Composition root: one gateway pipeline shared by the CoAP endpoint, the
// MQTT broker and the REST interface.

#include <memory>

#include "sgs/coap_endpoint.hpp"
#include "sgs/config.hpp"
#include "sgs/mqtt_broker.hpp"
#include "sgs/rest.hpp"

namespace sgs::service {

class GatewayDaemon {
public:
    /// Binds all listeners; a port of 0 picks an ephemeral one.
    explicit GatewayDaemon(GatewayConfig config);
    ~GatewayDaemon();
    GatewayDaemon(const GatewayDaemon&) = delete;
    GatewayDaemon& operator=(const GatewayDaemon&) = delete;

    void start();
    void stop();

    [[nodiscard]] std::uint16_t coap_port() const noexcept { return coap_->port(); }
    [[nodiscard]] std::uint16_t mqtt_port() const noexcept { return mqtt_->port(); }
    [[nodiscard]] std::uint16_t http_port() const noexcept { return http_->port(); }

    [[nodiscard]] proxy::Gateway& gateway() noexcept { return *gateway_; }
    [[nodiscard]] AccessControl& access() noexcept { return *access_; }
    [[nodiscard]] RestApi& rest() noexcept { return *rest_; }
    [[nodiscard]] mqtt::Broker& broker() noexcept { return mqtt_->broker(); }
    [[nodiscard]] const GatewayConfig& config() const noexcept { return config_; }

private:
    GatewayConfig config_;
    std::unique_ptr<proxy::Gateway> gateway_;
    std::unique_ptr<TokenStore> tokens_;
    std::unique_ptr<AccessControl> access_;
    std::unique_ptr<RestApi> rest_;
    std::unique_ptr<coap::CoapServer> coap_;
    std::unique_ptr<mqtt::MqttServer> mqtt_;
    std::unique_ptr<HttpServer> http_;
};

}  // namespace sgs::service
