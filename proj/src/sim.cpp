#include "sgs/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "httplib.h"
#include "json.hpp"
#include "sgs/annotation.hpp"
#include "sgs/clients.hpp"
#include "sgs/error.hpp"
#include "sgs/proxy.hpp"

namespace sgs::sim {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

[[noreturn]] void invalid(const std::string& what) {
    throw Error(ErrorCode::InvalidScenario, what);
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

double number_or(const json& obj, const char* key, double fallback) {
    const auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    if (!it->is_number()) invalid(std::string("'") + key + "' must be a number");
    return it->get<double>();
}

std::string string_or(const json& obj, const char* key, const std::string& fallback) {
    const auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    if (!it->is_string()) invalid(std::string("'") + key + "' must be a string");
    return it->get<std::string>();
}

ValueModel parse_value_model(const json& j) {
    ValueModel m;
    if (!j.is_object()) invalid("value_model must be an object");
    const auto kind = string_or(j, "kind", "constant");
    if (kind == "sine") {
        m.kind = ValueKind::sine;
    } else if (kind == "constant") {
        m.kind = ValueKind::constant;
    } else if (kind == "ramp") {
        m.kind = ValueKind::ramp;
    } else {
        invalid("unknown value model kind '" + kind + "'");
    }
    m.amplitude = number_or(j, "amplitude", 0);
    m.offset = number_or(j, "offset", 0);
    m.period_s = number_or(j, "period_s", 60);
    m.noise = number_or(j, "noise", 0);
    m.seed = static_cast<std::uint64_t>(number_or(j, "seed", 0));
    if (m.kind == ValueKind::sine && !(m.period_s > 0)) invalid("sine period_s must be positive");
    return m;
}

TokenSource parse_token(const json& j) {
    TokenSource t;
    if (j.is_null()) return t;
    if (j.is_string()) {
        t.literal = j.get<std::string>();
        return t;
    }
    if (!j.is_object()) invalid("token must be a string or {client_id, client_secret}");
    t.client_id = string_or(j, "client_id", "");
    t.client_secret = string_or(j, "client_secret", "");
    if (t.client_id->empty()) invalid("token.client_id is required");
    return t;
}

struct HttpTarget {
    std::unique_ptr<httplib::Client> client;

    explicit HttpTarget(const net::Address& a) : client(std::make_unique<httplib::Client>("http://" + a.str())) {
        client->set_connection_timeout(2, 0);
        client->set_read_timeout(5, 0);
        client->set_keep_alive(true);
    }
};

httplib::Headers auth_headers(const std::optional<std::string>& token) {
    httplib::Headers h;
    if (token) h.emplace("Authorization", "Bearer " + *token);
    return h;
}

GatewayCounters scrape_metrics(httplib::Client& http) {
    GatewayCounters c;
    const auto res = http.Get("/metrics");
    if (!res || res->status != 200) return c;
    try {
        const auto j = json::parse(res->body);
        c.ingested = j.value("ingested", 0ULL);
        c.parse_errors = j.value("parse_errors", 0ULL);
        c.annotation_errors = j.value("annotation_errors", 0ULL);
        c.drops = j.value("drops", 0ULL);
        c.denied = j.value("denied", 0ULL);
    } catch (const json::exception&) {
    }
    return c;
}

struct ObservationFields {
    std::string value;
    std::string time;
};

std::optional<ObservationFields> observation_fields(const rdf::Graph& g) {
    const auto value_pred = rdf::iri(rdf::ns::dul, "hasDataValue");
    const auto time_pred = rdf::iri(rdf::ns::ssn, "observationResultTime");
    ObservationFields f;
    for (const auto& t : g) {
        if (t.predicate.value == value_pred) f.value = t.object.value;
        if (t.predicate.value == time_pred) f.time = t.object.value;
    }
    if (f.value.empty() || f.time.empty()) return std::nullopt;
    return f;
}

struct Receipt {
    std::string topic;
    std::string payload;
    Instant at;
};

struct MqttSubscriberState {
    const SubscriberSpec* spec = nullptr;
    SubscriberReport report;
    std::unique_ptr<MqttClient> client;
    std::mutex mutex;
    std::vector<Receipt> receipts;

    std::size_t count() {
        std::lock_guard lock(mutex);
        return receipts.size();
    }
};

struct PollerState {
    const SubscriberSpec* spec = nullptr;
    SubscriberReport report;
    std::optional<std::string> token;
    std::vector<std::string> bodies;  // 200 responses
    std::thread thread;
};

struct SensorState {
    const SensorSpec* spec = nullptr;
    SensorReport report;
    std::vector<std::string> values;  // lexical values in publish order
    std::optional<Clock::time_point> first_start;
    std::optional<Clock::time_point> last_ack;
};

std::string random_suffix() {
    std::random_device rd;
    std::ostringstream s;
    s << std::hex << (rd() & 0xFFFFFF);
    return s.str();
}

void drive_sensor(SensorState& st, const Endpoints& ep, Clock::time_point start, double duration_s) {
    const auto& spec = *st.spec;
    const auto count = static_cast<std::uint64_t>(std::floor(duration_s * 1000.0 / spec.period_ms + 1e-9));
    std::unique_ptr<CoapClient> coap;
    std::unique_ptr<MqttClient> mqtt;
    try {
        if (spec.protocol == Protocol::coap) {
            coap = std::make_unique<CoapClient>(ep.coap);
        } else {
            mqtt = std::make_unique<MqttClient>(ep.mqtt, "sensor-" + spec.sensor_id + "-" + random_suffix());
        }
    } catch (const Error& e) {
        spdlog::error("sensor {}: {}", spec.sensor_id, e.what());
        st.report.attempted = count;
        st.report.failed = count;
        return;
    }
    const auto cf = spec.format == PayloadFormat::xml ? coap::content_format::xml : coap::content_format::json;
    for (std::uint64_t i = 0; i < count; ++i) {
        std::this_thread::sleep_until(start + std::chrono::milliseconds{i * spec.period_ms});
        const double value = gen_value(spec.value_model, static_cast<double>(i * spec.period_ms) / 1000.0);
        const auto payload =
            make_payload(spec, value, spec.stamp_time ? std::optional<Instant>(now_utc()) : std::nullopt);
        ++st.report.attempted;
        if (!st.first_start) st.first_start = Clock::now();
        try {
            bool ok = true;
            if (coap) {
                ok = coap->post(spec.coap_path(), payload, cf).code == coap::codes::changed;
            } else {
                mqtt->publish(spec.raw_topic(), payload, 1);
            }
            if (ok) {
                ++st.report.published;
                st.values.push_back(annotation::format_decimal(value));
                st.last_ack = Clock::now();
            } else {
                ++st.report.failed;
            }
        } catch (const Error& e) {
            ++st.report.failed;
            spdlog::warn("sensor {}: publish failed: {}", spec.sensor_id, e.what());
            if (mqtt && !mqtt->connected()) {
                try {
                    mqtt = std::make_unique<MqttClient>(ep.mqtt, "sensor-" + spec.sensor_id + "-" + random_suffix());
                } catch (const Error&) {
                }
            }
        }
    }
}

bool record_is_atomic(const std::string& body) {
    try {
        const auto j = json::parse(body);
        const auto raw = j.at("raw").get<std::string>();
        const auto fields = annotation::read_payload_fields(raw, annotation::sniff_format(raw));
        const auto obs = observation_fields(annotation::from_jsonld(j.at("annotated").get<std::string>()));
        if (!obs) return false;
        const auto expected_time =
            fields.time ? format_rfc3339(parse_rfc3339(*fields.time)) : j.at("received_at").get<std::string>();
        return obs->value == annotation::format_decimal(fields.value) && obs->time == expected_time;
    } catch (const std::exception&) {
        return false;
    }
}

bool looks_like_payload(const std::string& body) {
    return body.find("@graph") != std::string::npos || body.find("\"raw\"") != std::string::npos ||
           body.find("<reading") != std::string::npos || body.find("\"value\"") != std::string::npos;
}

void poll_loop(PollerState& st, const Endpoints& ep, const std::atomic<bool>& stop) {
    HttpTarget http(ep.http);
    const auto path = "/topics/" + st.spec->filter_or_topic + "/latest";
    const auto headers = auth_headers(st.token);
    auto next = Clock::now();
    while (!stop) {
        ++st.report.polls;
        if (auto res = http.client->Get(path, headers)) {
            if (res->status == 200) {
                ++st.report.received;
                st.bodies.push_back(res->body);
            } else if (res->status == 404) {
                ++st.report.not_found;
            } else if (res->status == 401 || res->status == 403) {
                ++st.report.denied;
                if (looks_like_payload(res->body)) st.report.leaked_bytes += res->body.size();
            }
        }
        if (auto rec = http.client->Get(path + "?view=record", headers)) {
            if (rec->status == 200 && !record_is_atomic(rec->body)) ++st.report.atomicity_violations;
            if ((rec->status == 401 || rec->status == 403) && looks_like_payload(rec->body))
                st.report.leaked_bytes += rec->body.size();
        }
        next += std::chrono::milliseconds{st.spec->poll_ms};
        while (!stop && Clock::now() < next) std::this_thread::sleep_for(std::chrono::milliseconds{5});
    }
}

std::optional<std::string> fetch_token(httplib::Client& http, const TokenSource& src, std::vector<std::string>& failures,
                                       const std::string& who) {
    if (src.literal) return src.literal;
    if (!src.client_id) return std::nullopt;
    httplib::Params form{{"grant_type", "client_credentials"},
                         {"client_id", *src.client_id},
                         {"client_secret", src.client_secret.value_or("")}};
    const auto res = http.Post("/oauth/token", form);
    if (!res || res->status != 200) {
        failures.push_back(who + ": token request failed");
        return std::nullopt;
    }
    try {
        return json::parse(res->body).at("access_token").get<std::string>();
    } catch (const json::exception&) {
        failures.push_back(who + ": malformed token response");
        return std::nullopt;
    }
}

SubscriberReport subscriber_report(const SubscriberSpec& spec) {
    SubscriberReport r;
    r.name = spec.name;
    r.transport = spec.transport;
    r.target = spec.filter_or_topic;
    return r;
}

std::string_view transport_name(SubscriberTransport t) {
    return t == SubscriberTransport::mqtt ? "mqtt" : "rest_poll";
}

json latency_json(const LatencyStats& l) {
    return json{{"samples", l.samples}, {"p50_ms", l.p50_ms}, {"p95_ms", l.p95_ms}, {"p99_ms", l.p99_ms},
                {"max_ms", l.max_ms}};
}

}  // namespace

double gen_value(const ValueModel& m, double t) {
    double v = m.offset;
    switch (m.kind) {
        case ValueKind::sine:
            v = m.offset + m.amplitude * std::sin(2 * std::numbers::pi * t / m.period_s);
            break;
        case ValueKind::constant:
            break;
        case ValueKind::ramp:
            v = m.offset + m.amplitude * t;
            break;
    }
    if (m.noise != 0) {
        const auto h = splitmix64(m.seed ^ splitmix64(static_cast<std::uint64_t>(std::llround(t * 1e6))));
        const double unit = static_cast<double>(h >> 11) / static_cast<double>(1ULL << 53);
        v += m.noise * (2 * unit - 1);
    }
    return v;
}

Scenario parse_scenario(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        invalid(std::string("scenario is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) invalid("scenario must be a JSON object");
    try {
        Scenario s;
        s.duration_s = number_or(doc, "duration_s", 10);
        if (s.duration_s < 0) invalid("duration_s must be non-negative");

        std::set<std::string> topics;
        for (const auto& j : doc.value("sensors", json::array())) {
            SensorSpec sensor;
            sensor.sensor_id = string_or(j, "sensor_id", "");
            if (sensor.sensor_id.empty()) invalid("sensor_id is required");
            const auto proto = string_or(j, "protocol", "coap");
            if (proto != "coap" && proto != "mqtt") invalid("sensor protocol must be coap or mqtt");
            sensor.protocol = proto == "coap" ? Protocol::coap : Protocol::mqtt;
            const auto fmt = string_or(j, "format", "json");
            if (fmt != "json" && fmt != "xml") invalid("sensor format must be json or xml");
            sensor.format = fmt == "json" ? PayloadFormat::json : PayloadFormat::xml;
            const auto period = number_or(j, "period_ms", 1000);
            if (period < 10) invalid("period_ms must be at least 10 (sensor " + sensor.sensor_id + ")");
            sensor.period_ms = static_cast<std::uint32_t>(period);
            if (j.contains("value_model")) sensor.value_model = parse_value_model(j.at("value_model"));
            sensor.resource = string_or(j, "resource", "reading");
            if (j.contains("unit")) sensor.unit = string_or(j, "unit", "");
            sensor.stamp_time = j.value("stamp_time", false);
            Topic::parse(sensor.raw_topic());
            if (!topics.insert(sensor.raw_topic()).second) invalid("duplicate sensor topic " + sensor.raw_topic());
            s.sensors.push_back(std::move(sensor));
        }

        std::size_t index = 0;
        for (const auto& j : doc.value("subscribers", json::array())) {
            SubscriberSpec sub;
            sub.name = string_or(j, "name", "sub" + std::to_string(++index));
            const auto transport = string_or(j, "transport", "mqtt");
            if (transport != "mqtt" && transport != "rest_poll") invalid("subscriber transport must be mqtt or rest_poll");
            sub.transport = transport == "mqtt" ? SubscriberTransport::mqtt : SubscriberTransport::rest_poll;
            sub.filter_or_topic = string_or(j, "filter_or_topic", string_or(j, "filter", string_or(j, "topic", "")));
            if (sub.filter_or_topic.empty()) invalid("subscriber '" + sub.name + "' needs filter_or_topic");
            if (sub.transport == SubscriberTransport::mqtt) {
                parse_topic_filter(sub.filter_or_topic);
            } else {
                Topic::parse(sub.filter_or_topic);
            }
            if (j.contains("token")) sub.token = parse_token(j.at("token"));
            const auto poll = number_or(j, "poll_ms", 100);
            if (poll < 10) invalid("poll_ms must be at least 10");
            sub.poll_ms = static_cast<std::uint32_t>(poll);
            s.subscribers.push_back(std::move(sub));
        }

        if (const auto e = doc.find("expected"); e != doc.end()) {
            s.expected.min_messages_per_subscriber =
                static_cast<std::uint64_t>(number_or(*e, "min_messages_per_subscriber", 0));
            s.expected.require_shape_valid = e->value("require_shape_valid", true);
            if (e->contains("max_drops")) s.expected.max_drops = static_cast<std::uint64_t>(number_or(*e, "max_drops", 0));
            if (e->contains("max_p99_latency_ms")) s.expected.max_p99_latency_ms = number_or(*e, "max_p99_latency_ms", 0);
            if (e->contains("min_ingest_rate")) s.expected.min_ingest_rate = number_or(*e, "min_ingest_rate", 0);
        }
        return s;
    } catch (const json::exception& e) {
        invalid(std::string("scenario: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InvalidScenario) throw;
        invalid(std::string("scenario: ") + e.what());
    }
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) invalid("cannot read scenario file '" + path.string() + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_scenario(text.str());
}

std::string make_payload(const SensorSpec& sensor, double value, std::optional<Instant> time) {
    if (sensor.format == PayloadFormat::json) {
        json j{{"sensor", sensor.sensor_id}, {"value", value}};
        if (sensor.unit) j["unit"] = *sensor.unit;
        if (time) j["time"] = format_rfc3339(*time);
        return j.dump();
    }
    std::string xml = "<reading sensor=\"" + sensor.sensor_id + "\" value=\"" + annotation::format_decimal(value) + "\"";
    if (sensor.unit) xml += " unit=\"" + *sensor.unit + "\"";
    if (time) xml += " time=\"" + format_rfc3339(*time) + "\"";
    return xml + "/>";
}

LatencyStats latency_stats(std::vector<double> samples) {
    LatencyStats s;
    s.samples = samples.size();
    if (samples.empty()) return s;
    std::sort(samples.begin(), samples.end());
    auto rank = [&](double p) {
        const auto n = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(samples.size())));
        return samples[std::clamp<std::size_t>(n, 1, samples.size()) - 1];
    };
    s.p50_ms = rank(50);
    s.p95_ms = rank(95);
    s.p99_ms = rank(99);
    s.max_ms = samples.back();
    return s;
}

RunReport run_scenario(const Scenario& scenario, const Endpoints& ep) {
    RunReport report;
    report.duration_s = scenario.duration_s;

    HttpTarget http(ep.http);
    const auto health = http.client->Get("/healthz");
    if (!health || health->status != 200)
        throw Error(ErrorCode::GatewayUnreachable, "gateway REST interface not reachable at " + ep.http.str());
    const auto before = scrape_metrics(*http.client);

    // Subscribers first so that no early publish is missed.
    std::vector<std::unique_ptr<MqttSubscriberState>> mqtt_subs;
    std::vector<std::unique_ptr<PollerState>> pollers;
    std::uint64_t suback_denials = 0;
    for (const auto& spec : scenario.subscribers) {
        const auto token = fetch_token(*http.client, spec.token, report.failures, spec.name);
        if (spec.transport == SubscriberTransport::rest_poll) {
            auto p = std::make_unique<PollerState>();
            p->spec = &spec;
            p->token = token;
            p->report = subscriber_report(spec);
            pollers.push_back(std::move(p));
            continue;
        }
        auto st = std::make_unique<MqttSubscriberState>();
        st->spec = &spec;
        st->report = subscriber_report(spec);
        auto* raw = st.get();
        st->client = std::make_unique<MqttClient>(
            ep.mqtt, "sgs-sim-" + spec.name + "-" + random_suffix(), token, [raw](const mqtt::Publish& p) {
                const auto at = now_utc();
                std::lock_guard lock(raw->mutex);
                raw->receipts.push_back(Receipt{p.topic.str(), std::string(p.payload.begin(), p.payload.end()), at});
            });
        const auto granted = st->client->subscribe({{spec.filter_or_topic, 0}});
        st->report.subscribed = !granted.empty() && granted.front() != mqtt::suback_failure;
        if (!st->report.subscribed) {
            ++st->report.denied;
            ++suback_denials;
        }
        mqtt_subs.push_back(std::move(st));
    }

    std::atomic<bool> stop_polling{false};
    for (auto& p : pollers) p->thread = std::thread([&, raw = p.get()] { poll_loop(*raw, ep, stop_polling); });

    std::vector<SensorState> sensors(scenario.sensors.size());
    {
        const auto start = Clock::now() + std::chrono::milliseconds{50};
        std::vector<std::thread> threads;
        for (std::size_t i = 0; i < sensors.size(); ++i) {
            sensors[i].spec = &scenario.sensors[i];
            sensors[i].report = SensorReport{scenario.sensors[i].sensor_id, scenario.sensors[i].protocol,
                                             scenario.sensors[i].raw_topic()};
            threads.emplace_back([&, i] { drive_sensor(sensors[i], ep, start, scenario.duration_s); });
        }
        for (auto& t : threads) t.join();
    }

    std::map<std::string, const SensorState*> by_obs_topic;
    std::uint64_t published = 0;
    std::optional<Clock::time_point> first;
    std::optional<Clock::time_point> last;
    for (const auto& s : sensors) {
        by_obs_topic[s.spec->obs_topic()] = &s;
        published += s.report.published;
        if (s.first_start && (!first || *s.first_start < *first)) first = s.first_start;
        if (s.last_ack && (!last || *s.last_ack > *last)) last = s.last_ack;
        report.sensors.push_back(s.report);
    }
    if (first && last) report.elapsed_s = std::chrono::duration<double>(*last - *first).count();
    if (report.elapsed_s > 0) report.ingest_rate = static_cast<double>(published) / report.elapsed_s;

    for (auto& st : mqtt_subs) {
        if (!st->report.subscribed) continue;
        const auto filter = parse_topic_filter(st->spec->filter_or_topic);
        for (const auto& s : sensors)
            if (proxy::matches(filter, Topic::parse(s.spec->obs_topic()))) st->report.expected += s.report.published;
    }

    // Drain: wait for outstanding deliveries until counts reach the
    // expectation or stop moving.
    {
        const auto deadline = Clock::now() + std::chrono::seconds{5};
        std::size_t previous = 0;
        auto stable_since = Clock::now();
        while (Clock::now() < deadline) {
            std::size_t total = 0;
            bool complete = true;
            for (auto& st : mqtt_subs) {
                const auto n = st->count();
                total += n;
                complete = complete && n >= st->report.expected;
            }
            if (complete) break;
            if (total != previous) {
                previous = total;
                stable_since = Clock::now();
            } else if (Clock::now() - stable_since > std::chrono::milliseconds{500}) {
                break;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds{20});
        }
    }
    stop_polling = true;
    for (auto& p : pollers) p->thread.join();
    for (auto& st : mqtt_subs) st->client->disconnect();

    const auto after = scrape_metrics(*http.client);
    report.gateway = GatewayCounters{after.ingested - before.ingested, after.parse_errors - before.parse_errors,
                                     after.annotation_errors - before.annotation_errors, after.drops - before.drops,
                                     after.denied - before.denied};

    // Validation happens after the run to keep receipt timestamps honest.
    // Per topic: annotated body -> position in MQTT delivery order.
    std::map<std::string, std::map<std::string, std::size_t>> mqtt_bodies;
    std::vector<double> all_latencies;
    std::int64_t signed_deficit = 0;
    for (auto& st : mqtt_subs) {
        auto& r = st->report;
        std::vector<double> latencies;
        std::map<std::string, std::size_t> cursor;
        std::map<std::string, std::size_t> per_topic;
        for (const auto& rc : st->receipts) {
            ++r.received;
            mqtt_bodies[rc.topic].emplace(rc.payload, per_topic[rc.topic]++);
            std::optional<ObservationFields> obs;
            try {
                const auto g = annotation::from_jsonld(rc.payload);
                if (annotation::check_shape(g).exact()) {
                    ++r.shape_valid;
                } else {
                    ++r.shape_invalid;
                }
                obs = observation_fields(g);
            } catch (const Error&) {
                ++r.shape_invalid;
            }
            if (!obs) continue;
            try {
                const auto lat = std::chrono::duration<double, std::milli>(rc.at - parse_rfc3339(obs->time)).count();
                latencies.push_back(lat);
            } catch (const Error&) {
            }
            const auto it = by_obs_topic.find(rc.topic);
            if (it == by_obs_topic.end()) continue;
            const auto& values = it->second->values;
            auto& pos = cursor[rc.topic];
            const auto found = std::find(values.begin() + static_cast<std::ptrdiff_t>(pos), values.end(), obs->value);
            if (found == values.end()) {
                ++r.out_of_order;
            } else {
                pos = static_cast<std::size_t>(found - values.begin()) + 1;
            }
        }
        all_latencies.insert(all_latencies.end(), latencies.begin(), latencies.end());
        r.latency = latency_stats(std::move(latencies));
        if (r.subscribed) signed_deficit += static_cast<std::int64_t>(r.expected) - static_cast<std::int64_t>(r.received);
        report.deficit += r.expected > r.received ? r.expected - r.received : 0;
    }
    report.latency = latency_stats(std::move(all_latencies));

    for (auto& p : pollers) {
        const auto it = mqtt_bodies.find(p->spec->filter_or_topic);
        if (it == mqtt_bodies.end()) continue;
        std::optional<std::size_t> previous;
        for (const auto& body : p->bodies) {
            const auto pos = it->second.find(body);
            if (pos == it->second.end()) {
                ++p->report.body_mismatch;
                continue;
            }
            if (previous && pos->second < *previous) ++p->report.stale_polls;
            previous = pos->second;
        }
    }

    report.gated = report.gateway.denied > suback_denials ? report.gateway.denied - suback_denials : 0;
    report.conservation_ok =
        signed_deficit == static_cast<std::int64_t>(report.gateway.drops) + static_cast<std::int64_t>(report.gated);

    for (const auto& s : report.sensors) {
        if (s.failed > 0)
            report.failures.push_back("sensor " + s.sensor_id + ": " + std::to_string(s.failed) + " publishes failed");
    }
    const auto& ex = scenario.expected;
    for (auto& st : mqtt_subs) {
        const auto& r = st->report;
        if (r.subscribed && r.received < ex.min_messages_per_subscriber)
            report.failures.push_back("subscriber " + r.name + ": received " + std::to_string(r.received) +
                                      " < expected " + std::to_string(ex.min_messages_per_subscriber));
        if (ex.require_shape_valid && r.shape_invalid > 0)
            report.failures.push_back("subscriber " + r.name + ": " + std::to_string(r.shape_invalid) +
                                      " documents failed shape validation");
        if (r.out_of_order > 0)
            report.failures.push_back("subscriber " + r.name + ": " + std::to_string(r.out_of_order) +
                                      " deliveries out of publish order");
        report.subscribers.push_back(r);
    }
    for (auto& p : pollers) {
        const auto& r = p->report;
        if (r.body_mismatch > 0)
            report.failures.push_back("poller " + r.name + ": " + std::to_string(r.body_mismatch) +
                                      " bodies differ from MQTT deliveries");
        if (r.stale_polls > 0)
            report.failures.push_back("poller " + r.name + ": " + std::to_string(r.stale_polls) +
                                      " polls returned an older delivery than a previous poll");
        if (r.atomicity_violations > 0)
            report.failures.push_back("poller " + r.name + ": " + std::to_string(r.atomicity_violations) +
                                      " mixed raw/annotated records");
        if (r.leaked_bytes > 0)
            report.failures.push_back("poller " + r.name + ": payload bytes on denied responses");
        report.subscribers.push_back(r);
    }
    if (!report.conservation_ok)
        report.failures.push_back("conservation: deficit " + std::to_string(signed_deficit) + " != drops " +
                                  std::to_string(report.gateway.drops) + " + gated " + std::to_string(report.gated));
    if (ex.max_drops && report.gateway.drops > *ex.max_drops)
        report.failures.push_back("drops " + std::to_string(report.gateway.drops) + " > " +
                                  std::to_string(*ex.max_drops));
    if (ex.max_p99_latency_ms && report.latency.p99_ms >= *ex.max_p99_latency_ms)
        report.failures.push_back("p99 latency " + std::to_string(report.latency.p99_ms) + " ms >= " +
                                  std::to_string(*ex.max_p99_latency_ms) + " ms");
    if (ex.min_ingest_rate && report.ingest_rate < *ex.min_ingest_rate)
        report.failures.push_back("ingest rate " + std::to_string(report.ingest_rate) + "/s < " +
                                  std::to_string(*ex.min_ingest_rate) + "/s");
    return report;
}

void write_jsonl(const RunReport& report, std::ostream& out) {
    for (const auto& s : report.sensors) {
        out << json{{"kind", "sensor"},          {"sensor_id", s.sensor_id}, {"protocol", to_string(s.protocol)},
                    {"topic", s.topic},          {"attempted", s.attempted}, {"published", s.published},
                    {"failed", s.failed}}
                   .dump()
            << '\n';
    }
    for (const auto& r : report.subscribers) {
        json j{{"kind", "subscriber"},
               {"name", r.name},
               {"transport", transport_name(r.transport)},
               {"target", r.target},
               {"received", r.received},
               {"denied", r.denied}};
        if (r.transport == SubscriberTransport::mqtt) {
            j["subscribed"] = r.subscribed;
            j["expected"] = r.expected;
            j["shape_valid"] = r.shape_valid;
            j["shape_invalid"] = r.shape_invalid;
            j["out_of_order"] = r.out_of_order;
            j["latency"] = latency_json(r.latency);
        } else {
            j["polls"] = r.polls;
            j["not_found"] = r.not_found;
            j["body_mismatch"] = r.body_mismatch;
            j["stale_polls"] = r.stale_polls;
            j["atomicity_violations"] = r.atomicity_violations;
            j["leaked_bytes"] = r.leaked_bytes;
        }
        out << j.dump() << '\n';
    }
    const auto& g = report.gateway;
    out << json{{"kind", "gateway"},
                {"ingested", g.ingested},
                {"parse_errors", g.parse_errors},
                {"annotation_errors", g.annotation_errors},
                {"drops", g.drops},
                {"denied", g.denied}}
               .dump()
        << '\n';
    out << json{{"kind", "summary"},
                {"duration_s", report.duration_s},
                {"elapsed_s", report.elapsed_s},
                {"ingest_rate", report.ingest_rate},
                {"loopback_latency", latency_json(report.latency)},
                {"deficit", report.deficit},
                {"gated", report.gated},
                {"conservation_ok", report.conservation_ok},
                {"passed", report.passed()},
                {"failures", report.failures}}
               .dump()
        << '\n';
}

void write_summary(const RunReport& report, std::ostream& out) {
    auto row = [&](std::initializer_list<std::string> cells) {
        const std::size_t widths[] = {22, 10, 30, 10, 10, 10, 10};
        std::size_t i = 0;
        for (const auto& c : cells) out << std::left << std::setw(static_cast<int>(widths[std::min<std::size_t>(i++, 6)])) << c;
        out << '\n';
    };
    out << "sensors\n";
    row({"id", "protocol", "topic", "attempted", "published", "failed"});
    for (const auto& s : report.sensors)
        row({s.sensor_id, std::string(to_string(s.protocol)), s.topic, std::to_string(s.attempted),
             std::to_string(s.published), std::to_string(s.failed)});
    out << "\nsubscribers\n";
    row({"name", "transport", "target", "expected", "received", "invalid", "denied"});
    for (const auto& r : report.subscribers)
        row({r.name, std::string(transport_name(r.transport)), r.target, std::to_string(r.expected),
             std::to_string(r.received), std::to_string(r.shape_invalid), std::to_string(r.denied)});
    out << std::fixed << std::setprecision(2);
    out << "\ningest rate      " << report.ingest_rate << " /s over " << report.elapsed_s << " s\n";
    out << "loopback latency p50 " << report.latency.p50_ms << " ms, p95 " << report.latency.p95_ms << " ms, p99 "
        << report.latency.p99_ms << " ms (" << report.latency.samples << " samples)\n";
    out << "gateway          ingested " << report.gateway.ingested << ", parse errors " << report.gateway.parse_errors
        << ", drops " << report.gateway.drops << ", denied " << report.gateway.denied << '\n';
    out << "result           " << (report.passed() ? "PASS" : "FAIL") << '\n';
    for (const auto& f : report.failures) out << "  - " << f << '\n';
    out.unsetf(std::ios::fixed);
}

}  // namespace sgs::sim
