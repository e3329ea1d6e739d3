#pragma once

// Scenario-driven simulation harness: virtual CoAP/MQTT sensors, validating
// MQTT subscribers and REST pollers, and a run report.

#include <chrono>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "sgs/model.hpp"
#include "sgs/net.hpp"

namespace sgs::sim {

enum class ValueKind { sine, constant, ramp };

struct ValueModel {
    ValueKind kind = ValueKind::constant;
    double amplitude = 0;
    double offset = 0;
    double period_s = 60;  // sine only
    double noise = 0;      // deterministic jitter amplitude derived from seed
    std::uint64_t seed = 0;
};

/// sine: offset + amplitude*sin(2*pi*t/period); constant: offset;
/// ramp: offset + amplitude*t. Plus seeded noise when configured.
double gen_value(const ValueModel& model, double t_seconds);

struct SensorSpec {
    std::string sensor_id;
    Protocol protocol = Protocol::coap;
    PayloadFormat format = PayloadFormat::json;
    std::uint32_t period_ms = 1000;
    ValueModel value_model;
    std::string resource = "reading";
    std::optional<std::string> unit;  // embedded in the payload when set
    bool stamp_time = false;          // otherwise the gateway stamps arrival time

    /// CoAP Uri-Path; the gateway files it under raw/.
    [[nodiscard]] std::string coap_path() const { return "sensors/" + sensor_id + "/" + resource; }
    [[nodiscard]] std::string raw_topic() const { return "raw/" + coap_path(); }
    [[nodiscard]] std::string obs_topic() const { return "obs/sensors/" + sensor_id + "/" + resource; }
};

enum class SubscriberTransport { mqtt, rest_poll };

struct TokenSource {
    std::optional<std::string> literal;
    std::optional<std::string> client_id;  // fetched via /oauth/token with client_secret
    std::optional<std::string> client_secret;
};

struct SubscriberSpec {
    std::string name;
    SubscriberTransport transport = SubscriberTransport::mqtt;
    std::string filter_or_topic;
    TokenSource token;
    std::uint32_t poll_ms = 100;
};

struct Expectations {
    std::uint64_t min_messages_per_subscriber = 0;
    bool require_shape_valid = true;
    std::optional<std::uint64_t> max_drops;
    std::optional<double> max_p99_latency_ms;
    std::optional<double> min_ingest_rate;
};

struct Scenario {
    double duration_s = 10;
    std::vector<SensorSpec> sensors;
    std::vector<SubscriberSpec> subscribers;
    Expectations expected;
};

/// Throws InvalidScenario.
Scenario parse_scenario(std::string_view json_text);
Scenario load_scenario(const std::filesystem::path& path);

/// Raw payload for one reading in the sensor's format.
std::string make_payload(const SensorSpec& sensor, double value, std::optional<Instant> time);

struct Endpoints {
    net::Address coap;
    net::Address mqtt;
    net::Address http;
};

struct LatencyStats {
    std::size_t samples = 0;
    double p50_ms = 0;
    double p95_ms = 0;
    double p99_ms = 0;
    double max_ms = 0;
};

/// Nearest-rank percentiles over millisecond samples.
LatencyStats latency_stats(std::vector<double> samples_ms);

struct SensorReport {
    std::string sensor_id;
    Protocol protocol = Protocol::coap;
    std::string topic;
    std::uint64_t attempted = 0;
    std::uint64_t published = 0;  // acknowledged by the gateway
    std::uint64_t failed = 0;
};

struct SubscriberReport {
    std::string name;
    SubscriberTransport transport = SubscriberTransport::mqtt;
    std::string target;
    bool subscribed = false;  // MQTT SUBACK granted
    std::uint64_t expected = 0;
    std::uint64_t received = 0;
    std::uint64_t shape_valid = 0;
    std::uint64_t shape_invalid = 0;
    std::uint64_t out_of_order = 0;
    std::uint64_t denied = 0;
    LatencyStats latency;
    // REST pollers
    std::uint64_t polls = 0;
    std::uint64_t not_found = 0;
    std::uint64_t body_mismatch = 0;      // 200 bodies never delivered over MQTT
    std::uint64_t stale_polls = 0;        // body older than one an earlier poll returned
    std::uint64_t atomicity_violations = 0;
    std::uint64_t leaked_bytes = 0;       // payload bytes observed on denied responses
};

struct GatewayCounters {
    std::uint64_t ingested = 0;
    std::uint64_t parse_errors = 0;
    std::uint64_t annotation_errors = 0;
    std::uint64_t drops = 0;
    std::uint64_t denied = 0;
};

struct RunReport {
    double duration_s = 0;
    double elapsed_s = 0;  // first publish to last acknowledgement
    double ingest_rate = 0;
    std::vector<SensorReport> sensors;
    std::vector<SubscriberReport> subscribers;
    GatewayCounters gateway;  // deltas over the run
    LatencyStats latency;     // all MQTT receipts
    std::uint64_t deficit = 0;
    std::uint64_t gated = 0;  // deliveries withheld by per-delivery authorization
    bool conservation_ok = true;
    std::vector<std::string> failures;

    [[nodiscard]] bool passed() const noexcept { return failures.empty(); }
};

/// Drives the scenario against a running gateway. Throws GatewayUnreachable.
RunReport run_scenario(const Scenario& scenario, const Endpoints& endpoints);

/// One JSON object per line: sensors, subscribers, gateway counters, summary.
void write_jsonl(const RunReport& report, std::ostream& out);
void write_summary(const RunReport& report, std::ostream& out);

}  // namespace sgs::sim
