#pragma once

// RFC 7252 message model and wire codec.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sgs/model.hpp"

namespace sgs::coap {

enum class MessageType : std::uint8_t { con = 0, non = 1, ack = 2, rst = 3 };

struct Code {
    std::uint8_t cls = 0;     // 0..7
    std::uint8_t detail = 0;  // 0..31

    [[nodiscard]] constexpr std::uint8_t raw() const noexcept {
        return static_cast<std::uint8_t>((cls << 5) | detail);
    }
    static constexpr Code from_raw(std::uint8_t b) noexcept {
        return {static_cast<std::uint8_t>(b >> 5), static_cast<std::uint8_t>(b & 0x1F)};
    }
    [[nodiscard]] constexpr bool is_request() const noexcept { return cls == 0 && detail != 0; }
    [[nodiscard]] constexpr bool is_empty() const noexcept { return cls == 0 && detail == 0; }
    [[nodiscard]] std::string str() const;

    friend constexpr bool operator==(Code, Code) = default;
};

namespace codes {
inline constexpr Code empty{0, 0};
inline constexpr Code get{0, 1};
inline constexpr Code post{0, 2};
inline constexpr Code put{0, 3};
inline constexpr Code del{0, 4};
inline constexpr Code changed{2, 4};
inline constexpr Code content{2, 5};
inline constexpr Code bad_request{4, 0};
inline constexpr Code unauthorized{4, 1};
inline constexpr Code bad_option{4, 2};
inline constexpr Code not_found{4, 4};
inline constexpr Code method_not_allowed{4, 5};
inline constexpr Code unsupported_content_format{4, 15};
inline constexpr Code internal_server_error{5, 0};
}  // namespace codes

namespace option {
inline constexpr std::uint16_t observe = 6;
inline constexpr std::uint16_t uri_path = 11;
inline constexpr std::uint16_t content_format = 12;

/// Odd option numbers are critical (RFC 7252 5.4.1).
constexpr bool is_critical(std::uint16_t number) noexcept { return (number & 1U) != 0; }
}  // namespace option

namespace content_format {
inline constexpr std::uint32_t xml = 41;
inline constexpr std::uint32_t json = 50;
}  // namespace content_format

struct Option {
    std::uint16_t number = 0;
    Bytes value;

    friend bool operator==(const Option&, const Option&) = default;
};

struct Message {
    std::uint8_t version = 1;
    MessageType type = MessageType::con;
    Bytes token;
    Code code{};
    std::uint16_t message_id = 0;
    std::vector<Option> options;  // sorted non-decreasing by number
    Bytes payload;

    friend bool operator==(const Message&, const Message&) = default;

    [[nodiscard]] std::vector<std::string> uri_path() const;
    [[nodiscard]] std::optional<std::uint32_t> uint_option(std::uint16_t number) const;
    [[nodiscard]] bool has_option(std::uint16_t number) const;

    /// Inserts keeping options sorted; repeated numbers keep insertion order.
    void add_option(std::uint16_t number, Bytes value);
    void add_uint_option(std::uint16_t number, std::uint32_t value);
    void set_uri_path(std::span<const std::string> segments);
};

/// Minimal big-endian uint option encoding (zero encodes as empty).
Bytes encode_uint(std::uint32_t value);
std::uint32_t decode_uint(std::span<const std::uint8_t> value);

/// Throws MalformedMessage.
Message decode(std::span<const std::uint8_t> datagram);

/// Canonical encoding with minimal extended delta/length forms.
/// Throws InvalidMessage.
Bytes encode(const Message& m);

}  // namespace sgs::coap
