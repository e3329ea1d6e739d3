// sgs: the gateway daemon.

#include <csignal>
#include <iostream>
#include <thread>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "sgs/daemon.hpp"
#include "sgs/error.hpp"

namespace {

volatile std::sig_atomic_t stop_requested = 0;

void on_signal(int) {
    stop_requested = 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semantic gateway: CoAP and MQTT southbound, annotated MQTT/CoAP/REST northbound"};
    app.require_subcommand(1);

    auto* serve = app.add_subcommand("serve", "Run the gateway");
    std::string config_path;
    std::optional<std::uint16_t> coap_port;
    std::optional<std::uint16_t> mqtt_port;
    std::optional<std::uint16_t> http_port;
    std::string log_level = "info";
    serve->add_option("--config", config_path, "Gateway configuration file (JSON)")->required()->check(CLI::ExistingFile);
    serve->add_option("--coap-port", coap_port, "UDP port for CoAP (default 5683)");
    serve->add_option("--mqtt-port", mqtt_port, "TCP port for MQTT (default 1883)");
    serve->add_option("--http-port", http_port, "TCP port for REST (default 8080)");
    serve->add_option("--log-level", log_level, "trace, debug, info, warn, error")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error"}));

    CLI11_PARSE(app, argc, argv);

    spdlog::set_level(spdlog::level::from_str(log_level));
    try {
        auto config = sgs::service::load_config(config_path);
        if (coap_port) config.coap_port = *coap_port;
        if (mqtt_port) config.mqtt_port = *mqtt_port;
        if (http_port) config.http_port = *http_port;

        sgs::service::GatewayDaemon daemon(std::move(config));
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        daemon.start();
        spdlog::info("gateway up: coap udp/{} mqtt tcp/{} http tcp/{}", daemon.coap_port(), daemon.mqtt_port(),
                     daemon.http_port());
        while (!stop_requested) std::this_thread::sleep_for(std::chrono::milliseconds{200});
        spdlog::info("shutting down");
        daemon.stop();
    } catch (const sgs::Error& e) {
        std::cerr << "sgs: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
