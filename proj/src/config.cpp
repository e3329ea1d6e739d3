#include "sgs/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sgs/error.hpp"

namespace sgs::service {

namespace {

using json = nlohmann::json;

[[noreturn]] void invalid(const std::string& what) {
    throw Error(ErrorCode::InvalidConfig, what);
}

std::string required_string(const json& obj, const char* key, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) invalid(where + ": missing string field '" + key + "'");
    return it->get<std::string>();
}

template <typename T>
T number_or(const json& obj, const char* key, T fallback) {
    const auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    if (!it->is_number_unsigned()) invalid(std::string("'") + key + "' must be a non-negative integer");
    return it->get<T>();
}

std::uint16_t port_or(const json& ports, const char* key, std::uint16_t fallback) {
    const auto v = number_or<std::uint64_t>(ports, key, fallback);
    if (v > 65535) invalid(std::string("port '") + key + "' out of range");
    return static_cast<std::uint16_t>(v);
}

Visibility parse_visibility(const std::string& s, const std::string& where) {
    if (s == "public") return Visibility::public_;
    if (s == "private") return Visibility::private_;
    invalid(where + ": visibility must be 'public' or 'private', got '" + s + "'");
}

}  // namespace

GatewayConfig parse_config(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        invalid(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) invalid("config must be a JSON object");

    GatewayConfig cfg;
    if (const auto it = doc.find("bind"); it != doc.end()) {
        if (!it->is_string()) invalid("'bind' must be a string");
        cfg.bind_host = it->get<std::string>();
    }
    if (const auto it = doc.find("ports"); it != doc.end()) {
        if (!it->is_object()) invalid("'ports' must be an object");
        cfg.coap_port = port_or(*it, "coap", cfg.coap_port);
        cfg.mqtt_port = port_or(*it, "mqtt", cfg.mqtt_port);
        cfg.http_port = port_or(*it, "http", cfg.http_port);
    }
    cfg.token_ttl = std::chrono::seconds{number_or<std::uint64_t>(doc, "token_ttl_s", 3600)};
    if (cfg.token_ttl.count() == 0) invalid("'token_ttl_s' must be positive");
    cfg.gateway.store_history = number_or<std::size_t>(doc, "store_history", 1);
    cfg.gateway.subscriber_queue_capacity = number_or<std::size_t>(doc, "subscriber_queue", 256);
    if (cfg.gateway.store_history == 0) invalid("'store_history' must be at least 1");
    if (cfg.gateway.subscriber_queue_capacity == 0) invalid("'subscriber_queue' must be at least 1");

    if (const auto it = doc.find("ontology"); it != doc.end()) {
        if (!it->is_object()) invalid("'ontology' must be an object");
        for (const char* table : {"properties", "units"}) {
            const auto t = it->find(table);
            if (t == it->end()) continue;
            if (!t->is_object()) invalid(std::string("ontology.") + table + " must be an object");
            auto& target = std::string_view(table) == "properties" ? cfg.ontology.properties : cfg.ontology.units;
            for (const auto& [k, v] : t->items()) {
                if (!v.is_string() || !is_absolute_iri(v.get<std::string>()))
                    invalid(std::string("ontology.") + table + "." + k + " must be an absolute IRI");
                target[k] = v.get<std::string>();
            }
        }
    }

    if (const auto it = doc.find("sensors"); it != doc.end()) {
        if (!it->is_array()) invalid("'sensors' must be an array");
        for (const auto& s : *it) {
            if (!s.is_object()) invalid("sensor entries must be objects");
            const auto id = required_string(s, "id", "sensor");
            const auto where = "sensor '" + id + "'";
            SensorRegistryEntry e;
            e.sensor_id = id;
            e.sensor_iri = required_string(s, "sensor_iri", where);
            e.observed_property = required_string(s, "property", where);
            e.property_iri = s.contains("property_iri") ? required_string(s, "property_iri", where)
                                                        : cfg.ontology.property_iri(e.observed_property).value_or("");
            e.feature_of_interest_iri = required_string(s, "feature_of_interest_iri", where);
            e.unit_code = required_string(s, "unit", where);
            if (s.contains("visibility")) e.visibility = parse_visibility(required_string(s, "visibility", where), where);
            cfg.registry.add(std::move(e));
        }
    }
    cfg.ontology.complete_from(cfg.registry);

    if (const auto it = doc.find("visibility"); it != doc.end()) {
        if (!it->is_array()) invalid("'visibility' must be an array");
        for (const auto& rule : *it) {
            if (!rule.is_object()) invalid("visibility rules must be objects");
            const auto prefix = required_string(rule, "prefix", "visibility rule");
            cfg.visibility.add(prefix, parse_visibility(required_string(rule, "visibility", prefix), prefix));
        }
    }
    for (const auto& [id, e] : cfg.registry.entries()) {
        if (e.visibility == Visibility::private_) cfg.visibility.add("obs/sensors/" + id, Visibility::private_);
    }

    if (const auto it = doc.find("clients"); it != doc.end()) {
        if (!it->is_array()) invalid("'clients' must be an array");
        for (const auto& c : *it) {
            if (!c.is_object()) invalid("client entries must be objects");
            ClientCredential cred;
            cred.client_id = required_string(c, "id", "client");
            cred.client_secret = required_string(c, "secret", "client '" + cred.client_id + "'");
            if (const auto scopes = c.find("scopes"); scopes != c.end()) {
                if (!scopes->is_array()) invalid("client '" + cred.client_id + "': 'scopes' must be an array");
                for (const auto& sc : *scopes) {
                    if (!sc.is_string()) invalid("client '" + cred.client_id + "': scopes must be strings");
                    cred.scopes.push_back(sc.get<std::string>());
                }
            }
            cfg.clients.push_back(std::move(cred));
        }
    }
    return cfg;
}

GatewayConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) invalid("cannot read config file '" + path.string() + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

}  // namespace sgs::service
