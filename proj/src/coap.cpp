#include "sgs/coap.hpp"

#include <algorithm>
#include <cstdio>

#include "sgs/error.hpp"

namespace sgs::coap {

namespace {

constexpr std::uint8_t payload_marker = 0xFF;
constexpr std::uint32_t ext8_base = 13;
constexpr std::uint32_t ext16_base = 269;
constexpr std::uint32_t max_ext = ext16_base + 0xFFFF;

[[noreturn]] void malformed(const std::string& why) {
    throw Error(ErrorCode::MalformedMessage, why);
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

    std::uint8_t u8() {
        need(1);
        return data_[pos_++];
    }
    std::uint16_t u16() {
        need(2);
        const auto v = static_cast<std::uint16_t>((data_[pos_] << 8) | data_[pos_ + 1]);
        pos_ += 2;
        return v;
    }
    Bytes take(std::size_t n) {
        need(n);
        Bytes out(data_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  data_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
        pos_ += n;
        return out;
    }
    [[nodiscard]] std::size_t remaining() const { return data_.size() - pos_; }
    [[nodiscard]] std::uint8_t peek() const { return data_[pos_]; }

private:
    void need(std::size_t n) const {
        if (remaining() < n) malformed("truncated buffer");
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

// Resolves a 4-bit delta/length nibble plus its extension bytes.
std::uint32_t read_extended(Reader& in, std::uint8_t nibble, const char* what) {
    switch (nibble) {
        case 13: return ext8_base + in.u8();
        case 14: return ext16_base + in.u16();
        case 15: malformed(std::string("reserved option ") + what + " nibble 15");
        default: return nibble;
    }
}

std::uint8_t nibble_for(std::uint32_t v) {
    if (v < ext8_base) return static_cast<std::uint8_t>(v);
    if (v < ext16_base) return 13;
    return 14;
}

void write_extended(Bytes& out, std::uint32_t v) {
    if (v < ext8_base) return;
    if (v < ext16_base) {
        out.push_back(static_cast<std::uint8_t>(v - ext8_base));
        return;
    }
    const auto e = v - ext16_base;
    out.push_back(static_cast<std::uint8_t>(e >> 8));
    out.push_back(static_cast<std::uint8_t>(e & 0xFF));
}

}  // namespace

std::string Code::str() const {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%u.%02u", static_cast<unsigned>(cls), static_cast<unsigned>(detail));
    return buf;
}

std::vector<std::string> Message::uri_path() const {
    std::vector<std::string> out;
    for (const auto& o : options)
        if (o.number == option::uri_path) out.emplace_back(o.value.begin(), o.value.end());
    return out;
}

std::optional<std::uint32_t> Message::uint_option(std::uint16_t number) const {
    for (const auto& o : options)
        if (o.number == number) return decode_uint(o.value);
    return std::nullopt;
}

bool Message::has_option(std::uint16_t number) const {
    return std::any_of(options.begin(), options.end(), [&](const Option& o) { return o.number == number; });
}

void Message::add_option(std::uint16_t number, Bytes value) {
    const auto pos = std::upper_bound(options.begin(), options.end(), number,
                                      [](std::uint16_t n, const Option& o) { return n < o.number; });
    options.insert(pos, Option{number, std::move(value)});
}

void Message::add_uint_option(std::uint16_t number, std::uint32_t value) {
    add_option(number, encode_uint(value));
}

void Message::set_uri_path(std::span<const std::string> segments) {
    std::erase_if(options, [](const Option& o) { return o.number == option::uri_path; });
    for (const auto& s : segments) add_option(option::uri_path, Bytes(s.begin(), s.end()));
}

Bytes encode_uint(std::uint32_t value) {
    Bytes out;
    for (int shift = 24; shift >= 0; shift -= 8) {
        const auto b = static_cast<std::uint8_t>((value >> shift) & 0xFF);
        if (!out.empty() || b != 0) out.push_back(b);
    }
    return out;
}

std::uint32_t decode_uint(std::span<const std::uint8_t> value) {
    std::uint32_t v = 0;
    for (auto b : value.first(std::min<std::size_t>(value.size(), 4))) v = (v << 8) | b;
    return v;
}

Message decode(std::span<const std::uint8_t> datagram) {
    Reader in(datagram);
    Message m;
    const auto first = in.u8();
    m.version = static_cast<std::uint8_t>(first >> 6);
    if (m.version != 1) malformed("unsupported version " + std::to_string(m.version));
    m.type = static_cast<MessageType>((first >> 4) & 0x3);
    const auto token_length = static_cast<std::size_t>(first & 0x0F);
    if (token_length > 8) malformed("token length field " + std::to_string(token_length) + " > 8");
    m.code = Code::from_raw(in.u8());
    m.message_id = in.u16();

    if (m.code.is_empty()) {
        if (token_length != 0 || in.remaining() != 0) malformed("empty message carries token or content");
        return m;
    }

    m.token = in.take(token_length);

    std::uint32_t number = 0;
    while (in.remaining() > 0) {
        const auto b = in.u8();
        if (b == payload_marker) {
            if (in.remaining() == 0) malformed("payload marker followed by empty payload");
            m.payload = in.take(in.remaining());
            break;
        }
        const auto delta = read_extended(in, static_cast<std::uint8_t>(b >> 4), "delta");
        const auto length = read_extended(in, static_cast<std::uint8_t>(b & 0x0F), "length");
        number += delta;
        if (number > 0xFFFF) malformed("option number overflow");
        m.options.push_back(Option{static_cast<std::uint16_t>(number), in.take(length)});
    }
    return m;
}

Bytes encode(const Message& m) {
    auto invalid = [](const std::string& why) { throw Error(ErrorCode::InvalidMessage, why); };
    if (m.version != 1) invalid("version must be 1");
    if (m.token.size() > 8) invalid("token longer than 8 bytes");
    if (m.code.cls > 7 || m.code.detail > 31) invalid("code out of range");
    if (static_cast<std::uint8_t>(m.type) > 3) invalid("message type out of range");
    if (m.code.is_empty() && (!m.token.empty() || !m.options.empty() || !m.payload.empty()))
        invalid("empty message must not carry token, options or payload");

    Bytes out;
    out.reserve(4 + m.token.size() + m.payload.size() + 8 * m.options.size() + 1);
    out.push_back(static_cast<std::uint8_t>((m.version << 6) | (static_cast<std::uint8_t>(m.type) << 4) |
                                            m.token.size()));
    out.push_back(m.code.raw());
    out.push_back(static_cast<std::uint8_t>(m.message_id >> 8));
    out.push_back(static_cast<std::uint8_t>(m.message_id & 0xFF));
    out.insert(out.end(), m.token.begin(), m.token.end());

    std::uint32_t previous = 0;
    for (const auto& o : m.options) {
        if (o.number < previous) invalid("options not sorted by number");
        if (o.value.size() > max_ext) invalid("option value too long");
        const auto delta = o.number - previous;
        const auto length = static_cast<std::uint32_t>(o.value.size());
        out.push_back(static_cast<std::uint8_t>((nibble_for(delta) << 4) | nibble_for(length)));
        write_extended(out, delta);
        write_extended(out, length);
        out.insert(out.end(), o.value.begin(), o.value.end());
        previous = o.number;
    }
    if (!m.payload.empty()) {
        out.push_back(payload_marker);
        out.insert(out.end(), m.payload.begin(), m.payload.end());
    }
    return out;
}

}  // namespace sgs::coap
