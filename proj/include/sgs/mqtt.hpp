#pragma once

// MQTT 3.1.1 control packets (QoS 0/1 subset) and streaming wire codec.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sgs/model.hpp"

namespace sgs::mqtt {

struct Connect {
    std::string client_id;
    std::uint16_t keep_alive_s = 60;
    bool clean_session = true;
    std::optional<std::string> username;
    /// Carries the bearer token for authorized northbound subscriptions.
    std::optional<std::string> password;

    friend bool operator==(const Connect&, const Connect&) = default;
};

struct Connack {
    bool session_present = false;
    std::uint8_t return_code = 0;

    friend bool operator==(const Connack&, const Connack&) = default;
};

struct Publish {
    Topic topic;
    std::uint8_t qos = 0;
    bool retain = false;
    bool dup = false;
    std::optional<std::uint16_t> packet_id;
    Bytes payload;

    friend bool operator==(const Publish&, const Publish&) = default;
};

struct Puback {
    std::uint16_t packet_id = 0;
    friend bool operator==(const Puback&, const Puback&) = default;
};

struct SubscribeEntry {
    TopicFilter filter;
    std::uint8_t requested_qos = 0;
    friend bool operator==(const SubscribeEntry&, const SubscribeEntry&) = default;
};

struct Subscribe {
    std::uint16_t packet_id = 0;
    std::vector<SubscribeEntry> filters;
    friend bool operator==(const Subscribe&, const Subscribe&) = default;
};

inline constexpr std::uint8_t suback_failure = 0x80;

struct Suback {
    std::uint16_t packet_id = 0;
    std::vector<std::uint8_t> granted;
    friend bool operator==(const Suback&, const Suback&) = default;
};

struct Unsubscribe {
    std::uint16_t packet_id = 0;
    std::vector<TopicFilter> filters;
    friend bool operator==(const Unsubscribe&, const Unsubscribe&) = default;
};

struct Unsuback {
    std::uint16_t packet_id = 0;
    friend bool operator==(const Unsuback&, const Unsuback&) = default;
};

struct Pingreq {
    friend bool operator==(const Pingreq&, const Pingreq&) = default;
};
struct Pingresp {
    friend bool operator==(const Pingresp&, const Pingresp&) = default;
};
struct Disconnect {
    friend bool operator==(const Disconnect&, const Disconnect&) = default;
};

using Packet = std::variant<Connect, Connack, Publish, Puback, Subscribe, Suback, Unsubscribe, Unsuback,
                            Pingreq, Pingresp, Disconnect>;

std::string_view packet_name(const Packet& p) noexcept;

inline constexpr std::uint32_t max_remaining_length = 268'435'455;

struct RemainingLength {
    std::uint32_t value = 0;
    std::size_t bytes_used = 0;
};

/// Decodes the variable-length remaining-length field. nullopt when more
/// bytes are needed; throws MalformedPacket past four bytes.
std::optional<RemainingLength> decode_remaining_length(std::span<const std::uint8_t> bytes);
Bytes encode_remaining_length(std::uint32_t value);

struct Decoded {
    Packet packet;
    std::size_t bytes_consumed = 0;
};

/// Streaming decode of the first packet in `bytes`. nullopt means the buffer
/// does not yet hold a complete packet. Throws MalformedPacket.
std::optional<Decoded> decode(std::span<const std::uint8_t> bytes);

/// Throws InvalidPacket.
Bytes encode(const Packet& p);

}  // namespace sgs::mqtt
