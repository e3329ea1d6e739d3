#include <type_traits>

#include "sgs/error.hpp"
#include "sgs/mqtt.hpp"

namespace sgs::mqtt {

namespace {

enum PacketType : std::uint8_t {
    kConnect = 1,
    kConnack = 2,
    kPublish = 3,
    kPuback = 4,
    kPubrec = 5,
    kPubrel = 6,
    kPubcomp = 7,
    kSubscribe = 8,
    kSuback = 9,
    kUnsubscribe = 10,
    kUnsuback = 11,
    kPingreq = 12,
    kPingresp = 13,
    kDisconnect = 14,
};

constexpr std::string_view protocol_name = "MQTT";
constexpr std::uint8_t protocol_level = 4;

[[noreturn]] void malformed(const std::string& why) {
    throw Error(ErrorCode::MalformedPacket, why);
}

[[noreturn]] void invalid(const std::string& why) {
    throw Error(ErrorCode::InvalidPacket, why);
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> body) : body_(body) {}

    std::uint8_t u8() {
        need(1);
        return body_[pos_++];
    }
    std::uint16_t u16() {
        need(2);
        const auto v = static_cast<std::uint16_t>((body_[pos_] << 8) | body_[pos_ + 1]);
        pos_ += 2;
        return v;
    }
    Bytes bytes(std::size_t n) {
        need(n);
        Bytes out(body_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  body_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
        pos_ += n;
        return out;
    }
    Bytes binary() { return bytes(u16()); }
    std::string utf8() {
        auto raw = binary();
        std::string s(raw.begin(), raw.end());
        if (s.find('\0') != std::string::npos) malformed("string contains U+0000");
        return s;
    }
    Bytes rest() { return bytes(remaining()); }
    [[nodiscard]] std::size_t remaining() const { return body_.size() - pos_; }

    void finish(const char* packet) const {
        if (remaining() != 0) malformed(std::string(packet) + " has trailing bytes");
    }

private:
    void need(std::size_t n) const {
        if (remaining() < n) malformed("packet body truncated");
    }

    std::span<const std::uint8_t> body_;
    std::size_t pos_ = 0;
};

class Writer {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) {
        out_.push_back(static_cast<std::uint8_t>(v >> 8));
        out_.push_back(static_cast<std::uint8_t>(v & 0xFF));
    }
    void binary(std::span<const std::uint8_t> b) {
        if (b.size() > 0xFFFF) invalid("field longer than 65535 bytes");
        u16(static_cast<std::uint16_t>(b.size()));
        raw(b);
    }
    void utf8(std::string_view s) {
        if (s.find('\0') != std::string_view::npos) invalid("string contains U+0000");
        binary({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
    }
    void raw(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }

    Bytes frame(std::uint8_t first_byte) && {
        if (out_.size() > max_remaining_length) invalid("packet exceeds maximum remaining length");
        Bytes packet{first_byte};
        const auto rl = encode_remaining_length(static_cast<std::uint32_t>(out_.size()));
        packet.insert(packet.end(), rl.begin(), rl.end());
        packet.insert(packet.end(), out_.begin(), out_.end());
        return packet;
    }

private:
    Bytes out_;
};

Topic publish_topic(const std::string& name) {
    if (name.find_first_of("+#") != std::string::npos) malformed("wildcard in PUBLISH topic '" + name + "'");
    try {
        return Topic::parse(name);
    } catch (const Error& e) {
        malformed(std::string("unsupported PUBLISH topic: ") + e.what());
    }
}

TopicFilter wire_filter(const std::string& text) {
    try {
        return parse_topic_filter(text);
    } catch (const Error& e) {
        malformed(e.what());
    }
}

Connect decode_connect(Reader& in) {
    if (in.utf8() != protocol_name) malformed("unknown protocol name");
    if (const auto level = in.u8(); level != protocol_level)
        malformed("unsupported protocol level " + std::to_string(level));
    const auto flags = in.u8();
    if (flags & 0x01) malformed("reserved CONNECT flag set");
    const bool will = flags & 0x04;
    const auto will_qos = (flags >> 3) & 0x03;
    const bool will_retain = flags & 0x20;
    const bool has_password = flags & 0x40;
    const bool has_username = flags & 0x80;
    if (!will && (will_qos != 0 || will_retain)) malformed("will QoS/retain without will flag");
    if (will_qos == 3) malformed("will QoS 3");
    if (has_password && !has_username) malformed("password without user name");

    Connect c;
    c.clean_session = flags & 0x02;
    c.keep_alive_s = in.u16();
    c.client_id = in.utf8();
    if (will) {
        // Will messages are not supported; the fields are consumed and dropped.
        (void)in.utf8();
        (void)in.binary();
    }
    if (has_username) c.username = in.utf8();
    if (has_password) {
        auto pw = in.binary();
        c.password = std::string(pw.begin(), pw.end());
    }
    in.finish("CONNECT");
    return c;
}

Packet decode_body(std::uint8_t type, std::uint8_t flags, std::span<const std::uint8_t> body) {
    Reader in(body);
    auto require_flags = [&](std::uint8_t expected, const char* name) {
        if (flags != expected) malformed(std::string("invalid fixed-header flags for ") + name);
    };

    switch (type) {
        case kConnect:
            require_flags(0, "CONNECT");
            return decode_connect(in);
        case kConnack: {
            require_flags(0, "CONNACK");
            Connack c;
            const auto ack_flags = in.u8();
            if (ack_flags & 0xFE) malformed("reserved CONNACK flags set");
            c.session_present = ack_flags & 0x01;
            c.return_code = in.u8();
            in.finish("CONNACK");
            return c;
        }
        case kPublish: {
            const auto qos = static_cast<std::uint8_t>((flags >> 1) & 0x03);
            if (qos == 3) malformed("PUBLISH QoS 3");
            if (qos == 2) malformed("PUBLISH QoS 2 is not supported");
            const bool dup = flags & 0x08;
            if (qos == 0 && dup) malformed("DUP set on QoS 0 PUBLISH");
            auto topic = publish_topic(in.utf8());
            std::optional<std::uint16_t> packet_id;
            if (qos > 0) {
                packet_id = in.u16();
                if (*packet_id == 0) malformed("packet identifier 0");
            }
            return Publish{std::move(topic), qos, static_cast<bool>(flags & 0x01), dup, packet_id, in.rest()};
        }
        case kPuback: {
            require_flags(0, "PUBACK");
            Puback p{in.u16()};
            in.finish("PUBACK");
            return p;
        }
        case kSubscribe: {
            require_flags(0x02, "SUBSCRIBE");
            Subscribe s;
            s.packet_id = in.u16();
            while (in.remaining() > 0) {
                auto filter = wire_filter(in.utf8());
                const auto qos = in.u8();
                if (qos > 2) malformed("invalid requested QoS");
                s.filters.push_back({std::move(filter), qos});
            }
            if (s.filters.empty()) malformed("SUBSCRIBE without topic filters");
            return s;
        }
        case kSuback: {
            require_flags(0, "SUBACK");
            Suback s;
            s.packet_id = in.u16();
            while (in.remaining() > 0) {
                const auto rc = in.u8();
                if (rc > 2 && rc != suback_failure) malformed("invalid SUBACK return code");
                s.granted.push_back(rc);
            }
            return s;
        }
        case kUnsubscribe: {
            require_flags(0x02, "UNSUBSCRIBE");
            Unsubscribe u;
            u.packet_id = in.u16();
            while (in.remaining() > 0) u.filters.push_back(wire_filter(in.utf8()));
            if (u.filters.empty()) malformed("UNSUBSCRIBE without topic filters");
            return u;
        }
        case kUnsuback: {
            require_flags(0, "UNSUBACK");
            Unsuback u{in.u16()};
            in.finish("UNSUBACK");
            return u;
        }
        case kPingreq:
            require_flags(0, "PINGREQ");
            in.finish("PINGREQ");
            return Pingreq{};
        case kPingresp:
            require_flags(0, "PINGRESP");
            in.finish("PINGRESP");
            return Pingresp{};
        case kDisconnect:
            require_flags(0, "DISCONNECT");
            in.finish("DISCONNECT");
            return Disconnect{};
        case kPubrec:
        case kPubrel:
        case kPubcomp:
            malformed("QoS 2 flow packets are not supported");
        default:
            malformed("reserved packet type " + std::to_string(type));
    }
}

}  // namespace

std::string_view packet_name(const Packet& p) noexcept {
    constexpr std::string_view names[] = {"CONNECT",     "CONNACK",  "PUBLISH", "PUBACK",   "SUBSCRIBE", "SUBACK",
                                          "UNSUBSCRIBE", "UNSUBACK", "PINGREQ", "PINGRESP", "DISCONNECT"};
    return names[p.index()];
}

std::optional<RemainingLength> decode_remaining_length(std::span<const std::uint8_t> bytes) {
    std::uint32_t value = 0;
    std::uint32_t multiplier = 1;
    for (std::size_t i = 0; i < 4; ++i) {
        if (i >= bytes.size()) return std::nullopt;
        const auto b = bytes[i];
        value += (b & 0x7FU) * multiplier;
        if ((b & 0x80U) == 0) return RemainingLength{value, i + 1};
        multiplier *= 128;
    }
    malformed("remaining length exceeds four bytes");
}

Bytes encode_remaining_length(std::uint32_t value) {
    if (value > max_remaining_length) invalid("remaining length too large");
    Bytes out;
    do {
        auto b = static_cast<std::uint8_t>(value % 128);
        value /= 128;
        if (value > 0) b |= 0x80;
        out.push_back(b);
    } while (value > 0);
    return out;
}

std::optional<Decoded> decode(std::span<const std::uint8_t> bytes) {
    if (bytes.empty()) return std::nullopt;
    const auto type = static_cast<std::uint8_t>(bytes[0] >> 4);
    const auto flags = static_cast<std::uint8_t>(bytes[0] & 0x0F);
    if (type == 0 || type == 15) malformed("reserved packet type " + std::to_string(type));

    const auto rl = decode_remaining_length(bytes.subspan(1));
    if (!rl) return std::nullopt;
    const auto header = 1 + rl->bytes_used;
    if (bytes.size() < header + rl->value) return std::nullopt;

    auto packet = decode_body(type, flags, bytes.subspan(header, rl->value));
    return Decoded{std::move(packet), header + rl->value};
}

Bytes encode(const Packet& p) {
    return std::visit(
        [](const auto& pkt) -> Bytes {
            using T = std::decay_t<decltype(pkt)>;
            Writer w;
            if constexpr (std::is_same_v<T, Connect>) {
                if (pkt.password && !pkt.username) invalid("password without user name");
                w.utf8(protocol_name);
                w.u8(protocol_level);
                std::uint8_t flags = pkt.clean_session ? 0x02 : 0x00;
                if (pkt.password) flags |= 0x40;
                if (pkt.username) flags |= 0x80;
                w.u8(flags);
                w.u16(pkt.keep_alive_s);
                w.utf8(pkt.client_id);
                if (pkt.username) w.utf8(*pkt.username);
                if (pkt.password)
                    w.binary({reinterpret_cast<const std::uint8_t*>(pkt.password->data()), pkt.password->size()});
                return std::move(w).frame(kConnect << 4);
            } else if constexpr (std::is_same_v<T, Connack>) {
                w.u8(pkt.session_present ? 1 : 0);
                w.u8(pkt.return_code);
                return std::move(w).frame(kConnack << 4);
            } else if constexpr (std::is_same_v<T, Publish>) {
                if (pkt.qos > 1) invalid("QoS above 1 is not supported");
                if ((pkt.qos == 1) != pkt.packet_id.has_value())
                    invalid("packet identifier must be present iff QoS is 1");
                if (pkt.packet_id && *pkt.packet_id == 0) invalid("packet identifier 0");
                if (pkt.dup && pkt.qos == 0) invalid("DUP set on QoS 0 PUBLISH");
                w.utf8(pkt.topic.str());
                if (pkt.packet_id) w.u16(*pkt.packet_id);
                w.raw(pkt.payload);
                const auto first = static_cast<std::uint8_t>((kPublish << 4) | (pkt.dup ? 0x08 : 0) |
                                                             (pkt.qos << 1) | (pkt.retain ? 0x01 : 0));
                return std::move(w).frame(first);
            } else if constexpr (std::is_same_v<T, Puback>) {
                w.u16(pkt.packet_id);
                return std::move(w).frame(kPuback << 4);
            } else if constexpr (std::is_same_v<T, Subscribe>) {
                if (pkt.filters.empty()) invalid("SUBSCRIBE needs at least one filter");
                w.u16(pkt.packet_id);
                for (const auto& f : pkt.filters) {
                    if (f.requested_qos > 2) invalid("invalid requested QoS");
                    w.utf8(f.filter.str());
                    w.u8(f.requested_qos);
                }
                return std::move(w).frame((kSubscribe << 4) | 0x02);
            } else if constexpr (std::is_same_v<T, Suback>) {
                w.u16(pkt.packet_id);
                for (auto rc : pkt.granted) {
                    if (rc > 2 && rc != suback_failure) invalid("invalid SUBACK return code");
                    w.u8(rc);
                }
                return std::move(w).frame(kSuback << 4);
            } else if constexpr (std::is_same_v<T, Unsubscribe>) {
                if (pkt.filters.empty()) invalid("UNSUBSCRIBE needs at least one filter");
                w.u16(pkt.packet_id);
                for (const auto& f : pkt.filters) w.utf8(f.str());
                return std::move(w).frame((kUnsubscribe << 4) | 0x02);
            } else if constexpr (std::is_same_v<T, Unsuback>) {
                w.u16(pkt.packet_id);
                return std::move(w).frame(kUnsuback << 4);
            } else if constexpr (std::is_same_v<T, Pingreq>) {
                return std::move(w).frame(kPingreq << 4);
            } else if constexpr (std::is_same_v<T, Pingresp>) {
                return std::move(w).frame(kPingresp << 4);
            } else {
                static_assert(std::is_same_v<T, Disconnect>);
                return std::move(w).frame(kDisconnect << 4);
            }
        },
        p);
}

}  // namespace sgs::mqtt
