#pragma once

// Protocol-independent domain types shared by every gateway module.

#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sgs {

using Bytes = std::vector<std::uint8_t>;
using Instant = std::chrono::sys_time<std::chrono::microseconds>;

Instant now_utc();

/// Parses an RFC 3339 timestamp ("2014-06-01T12:00:00Z", optional fraction,
/// optional numeric offset) and normalizes it to UTC. Throws ParseError.
Instant parse_rfc3339(std::string_view text);

/// Canonical UTC rendering: seconds always present, fraction only when
/// non-zero with trailing zeros trimmed, "Z" suffix.
std::string format_rfc3339(Instant t);

enum class Protocol { coap, mqtt };
enum class PayloadFormat { json, xml };

std::string_view to_string(Protocol p) noexcept;
std::string_view to_string(PayloadFormat f) noexcept;

/// A concrete topic name: one or more non-empty segments, none of which
/// contain '/', '+' or '#'.
class Topic {
public:
    explicit Topic(std::vector<std::string> segments);

    /// Splits on '/' and validates. Throws InvalidTopic.
    static Topic parse(std::string_view text);

    [[nodiscard]] const std::vector<std::string>& segments() const noexcept { return segments_; }
    [[nodiscard]] std::size_t size() const noexcept { return segments_.size(); }
    [[nodiscard]] const std::string& front() const { return segments_.front(); }
    [[nodiscard]] std::string str() const;

    /// Segment-wise prefix test: "a/b" is a prefix of "a/b/c" but not of "a/bc".
    [[nodiscard]] bool has_prefix(std::span<const std::string> prefix) const noexcept;
    [[nodiscard]] bool has_prefix(const Topic& prefix) const noexcept { return has_prefix(prefix.segments_); }

    friend auto operator<=>(const Topic&, const Topic&) = default;
    friend bool operator==(const Topic&, const Topic&) = default;

private:
    std::vector<std::string> segments_;
};

/// MQTT-style subscription filter. '+' matches one level, a trailing '#'
/// matches the remainder including the parent level.
class TopicFilter {
public:
    static constexpr std::string_view single_level = "+";
    static constexpr std::string_view multi_level = "#";

    explicit TopicFilter(std::vector<std::string> segments);

    [[nodiscard]] const std::vector<std::string>& segments() const noexcept { return segments_; }
    [[nodiscard]] std::string str() const;
    [[nodiscard]] bool has_wildcards() const noexcept;

    /// Leading literal segments before the first wildcard.
    [[nodiscard]] std::vector<std::string> literal_prefix() const;

    friend auto operator<=>(const TopicFilter&, const TopicFilter&) = default;
    friend bool operator==(const TopicFilter&, const TopicFilter&) = default;

private:
    std::vector<std::string> segments_;
};

/// Throws InvalidFilter on an empty segment, a '#' that is not last, or a
/// wildcard embedded in a literal ("a#", "x+y").
TopicFilter parse_topic_filter(std::string_view text);

/// Maps a CoAP Uri-Path onto the raw southbound namespace:
/// ["sensors","s1","temp"] -> raw/sensors/s1/temp.
/// Throws EmptyPath or InvalidSegment.
Topic topic_from_uri_path(std::span<const std::string> segments);

/// raw/x/y -> obs/x/y. Throws NotRawTopic.
Topic north_topic_for(const Topic& raw);

/// obs/x/y -> raw/x/y. Throws NotRawTopic when the topic is not under obs.
Topic raw_topic_for(const Topic& north);

inline constexpr std::string_view raw_namespace = "raw";
inline constexpr std::string_view north_namespace = "obs";

struct SensorReading {
    std::string sensor_id;
    std::string observed_property;
    double value = 0.0;
    std::string unit;
    Instant timestamp{};
    Protocol source_protocol = Protocol::coap;
    PayloadFormat source_format = PayloadFormat::json;
    /// Set when the payload carried no time and arrival time was substituted.
    bool time_from_gateway = false;

    friend bool operator==(const SensorReading&, const SensorReading&) = default;
};

struct StoredMessage {
    Topic topic;
    std::string raw_payload;
    std::string annotated_jsonld;
    std::uint64_t sequence = 0;
    Instant received_at{};
};

enum class Visibility { public_, private_ };

struct SensorRegistryEntry {
    std::string sensor_id;
    std::string observed_property;
    std::string sensor_iri;
    std::string property_iri;
    std::string feature_of_interest_iri;
    std::string unit_code;
    Visibility visibility = Visibility::public_;
};

/// True when the string starts with an RFC 3986 scheme followed by ':'.
bool is_absolute_iri(std::string_view iri) noexcept;

}  // namespace sgs
