#pragma once

// Gateway configuration file (JSON).
//
// {
//   "ports": {"coap": 5683, "mqtt": 1883, "http": 8080},
//   "bind": "0.0.0.0",
//   "token_ttl_s": 3600,
//   "store_history": 1,
//   "subscriber_queue": 256,
//   "sensors": [{"id": "s1", "sensor_iri": "...", "property": "temperature",
//                "property_iri": "...", "feature_of_interest_iri": "...",
//                "unit": "Cel", "visibility": "public"}],
//   "ontology": {"properties": {"temperature": "..."}, "units": {"Cel": "..."}},
//   "visibility": [{"prefix": "obs/sensors/s2", "visibility": "private"}],
//   "clients": [{"id": "app", "secret": "...", "scopes": ["obs/sensors/s2"]}]
// }

#include <chrono>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sgs/annotation.hpp"
#include "sgs/auth.hpp"
#include "sgs/proxy.hpp"

namespace sgs::service {

struct GatewayConfig {
    std::string bind_host = "0.0.0.0";
    std::uint16_t coap_port = 5683;
    std::uint16_t mqtt_port = 1883;
    std::uint16_t http_port = 8080;
    std::chrono::seconds token_ttl{3600};
    proxy::GatewayOptions gateway;
    annotation::SensorRegistry registry;
    annotation::DomainOntologyMap ontology;
    VisibilityMap visibility;
    std::vector<ClientCredential> clients;
};

/// Throws InvalidConfig.
GatewayConfig parse_config(std::string_view json_text);
GatewayConfig load_config(const std::filesystem::path& path);

}  // namespace sgs::service
