#include "sgs/daemon.hpp"

namespace sgs::service {

namespace {

net::Address bind_address(const std::string& host, std::uint16_t port) {
    return net::Address::parse((host.find(':') != std::string::npos ? "[" + host + "]" : host) + ":" +
                               std::to_string(port));
}

}  // namespace

GatewayDaemon::GatewayDaemon(GatewayConfig config) : config_(std::move(config)) {
    gateway_ = std::make_unique<proxy::Gateway>(config_.registry, config_.ontology, config_.gateway);
    tokens_ = std::make_unique<TokenStore>(config_.clients, config_.token_ttl);
    access_ = std::make_unique<AccessControl>(config_.visibility, *tokens_);
    rest_ = std::make_unique<RestApi>(*gateway_, *access_);
    coap_ = std::make_unique<coap::CoapServer>(*gateway_, *access_, bind_address(config_.bind_host, config_.coap_port));
    mqtt_ = std::make_unique<mqtt::MqttServer>(*gateway_, *access_, bind_address(config_.bind_host, config_.mqtt_port));
    http_ = std::make_unique<HttpServer>(*rest_, config_.bind_host, config_.http_port);
}

GatewayDaemon::~GatewayDaemon() {
    stop();
}

void GatewayDaemon::start() {
    coap_->start();
    mqtt_->start();
    http_->start();
}

void GatewayDaemon::stop() {
    http_->stop();
    mqtt_->stop();
    coap_->stop();
}

}  // namespace sgs::service
