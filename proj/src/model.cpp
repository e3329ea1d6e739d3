#include "sgs/model.hpp"

#include <charconv>
#include <cstdio>

#include "sgs/error.hpp"

namespace sgs {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::EmptyPath: return "EmptyPath";
        case ErrorCode::InvalidSegment: return "InvalidSegment";
        case ErrorCode::InvalidTopic: return "InvalidTopic";
        case ErrorCode::NotRawTopic: return "NotRawTopic";
        case ErrorCode::InvalidFilter: return "InvalidFilter";
        case ErrorCode::MalformedMessage: return "MalformedMessage";
        case ErrorCode::InvalidMessage: return "InvalidMessage";
        case ErrorCode::MalformedPacket: return "MalformedPacket";
        case ErrorCode::InvalidPacket: return "InvalidPacket";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::UnknownSensor: return "UnknownSensor";
        case ErrorCode::UnknownProperty: return "UnknownProperty";
        case ErrorCode::InvalidGraph: return "InvalidGraph";
        case ErrorCode::InvalidJsonLd: return "InvalidJsonLd";
        case ErrorCode::InvalidClient: return "InvalidClient";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::InvalidScenario: return "InvalidScenario";
        case ErrorCode::GatewayUnreachable: return "GatewayUnreachable";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

std::string_view to_string(Protocol p) noexcept {
    return p == Protocol::coap ? "coap" : "mqtt";
}

std::string_view to_string(PayloadFormat f) noexcept {
    return f == PayloadFormat::json ? "json" : "xml";
}

Instant now_utc() {
    return std::chrono::time_point_cast<std::chrono::microseconds>(std::chrono::system_clock::now());
}

namespace {

std::vector<std::string> split(std::string_view text, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(sep, start);
        out.emplace_back(text.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string join(const std::vector<std::string>& segments) {
    std::string out;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (i) out += '/';
        out += segments[i];
    }
    return out;
}

// Empty string when valid, otherwise the reason.
std::string_view segment_problem(std::string_view s) {
    if (s.empty()) return "empty segment";
    if (s.find_first_of("/+#") != std::string_view::npos) return "segment contains '/', '+' or '#'";
    return {};
}

class Cursor {
public:
    explicit Cursor(std::string_view text) : text_(text) {}

    int digits(std::size_t n) {
        if (pos_ + n > text_.size()) fail("truncated");
        int value = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const char c = text_[pos_ + i];
            if (c < '0' || c > '9') fail("expected digit");
            value = value * 10 + (c - '0');
        }
        pos_ += n;
        return value;
    }

    void expect(std::string_view chars) {
        if (pos_ >= text_.size() || chars.find(text_[pos_]) == std::string_view::npos)
            fail("expected one of '" + std::string(chars) + "'");
        ++pos_;
    }

    [[nodiscard]] bool at(char c) const { return pos_ < text_.size() && text_[pos_] == c; }
    [[nodiscard]] bool done() const { return pos_ == text_.size(); }
    char next() { return text_[pos_++]; }

    [[noreturn]] void fail(const std::string& why) const {
        throw Error(ErrorCode::ParseError,
                    "invalid RFC 3339 timestamp '" + std::string(text_) + "': " + why);
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
};

}  // namespace

Instant parse_rfc3339(std::string_view text) {
    using namespace std::chrono;
    Cursor cur(text);
    const int y = cur.digits(4);
    cur.expect("-");
    const int mo = cur.digits(2);
    cur.expect("-");
    const int d = cur.digits(2);
    cur.expect("Tt");
    const int h = cur.digits(2);
    cur.expect(":");
    const int mi = cur.digits(2);
    cur.expect(":");
    const int s = cur.digits(2);

    long micros = 0;
    if (cur.at('.')) {
        cur.next();
        int count = 0;
        while (!cur.done() && !cur.at('Z') && !cur.at('z') && !cur.at('+') && !cur.at('-')) {
            const int digit = cur.digits(1);
            // Sub-microsecond digits are truncated.
            if (count < 6) micros = micros * 10 + digit;
            ++count;
        }
        if (count == 0) cur.fail("empty fraction");
        for (int i = count; i < 6; ++i) micros *= 10;
    }

    int offset_minutes = 0;
    if (cur.at('Z') || cur.at('z')) {
        cur.next();
    } else {
        const char sign = cur.next();
        if (sign != '+' && sign != '-') cur.fail("expected zone designator");
        const int oh = cur.digits(2);
        cur.expect(":");
        const int om = cur.digits(2);
        if (oh > 23 || om > 59) cur.fail("offset out of range");
        offset_minutes = (sign == '+' ? 1 : -1) * (oh * 60 + om);
    }
    if (!cur.done()) cur.fail("trailing characters");

    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    // Leap second 60 is rejected; the gateway clock never produces one.
    if (!ymd.ok() || h > 23 || mi > 59 || s > 59) cur.fail("field out of range");

    const auto local = sys_days{ymd} + hours{h} + minutes{mi} + seconds{s} + microseconds{micros};
    return local - minutes{offset_minutes};
}

std::string format_rfc3339(Instant t) {
    using namespace std::chrono;
    const auto day_point = floor<days>(t);
    const year_month_day ymd{day_point};
    auto rest = t - day_point;
    const auto h = duration_cast<hours>(rest);
    rest -= h;
    const auto m = duration_cast<minutes>(rest);
    rest -= m;
    const auto s = duration_cast<seconds>(rest);
    rest -= s;
    const auto us = rest.count();

    char buf[64];
    int n = std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02lld", static_cast<int>(ymd.year()),
                          static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                          static_cast<int>(h.count()), static_cast<int>(m.count()),
                          static_cast<long long>(s.count()));
    std::string out(buf, static_cast<std::size_t>(n));
    if (us != 0) {
        n = std::snprintf(buf, sizeof buf, ".%06lld", static_cast<long long>(us));
        std::string frac(buf, static_cast<std::size_t>(n));
        while (frac.back() == '0') frac.pop_back();
        out += frac;
    }
    out += 'Z';
    return out;
}

Topic::Topic(std::vector<std::string> segments) : segments_(std::move(segments)) {
    if (segments_.empty()) throw Error(ErrorCode::InvalidTopic, "topic has no segments");
    for (const auto& s : segments_) {
        if (auto why = segment_problem(s); !why.empty())
            throw Error(ErrorCode::InvalidTopic, std::string(why) + " in topic '" + join(segments_) + "'");
    }
}

Topic Topic::parse(std::string_view text) {
    return Topic(split(text, '/'));
}

std::string Topic::str() const {
    return join(segments_);
}

bool Topic::has_prefix(std::span<const std::string> prefix) const noexcept {
    if (prefix.size() > segments_.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i)
        if (prefix[i] != segments_[i]) return false;
    return true;
}

TopicFilter::TopicFilter(std::vector<std::string> segments) : segments_(std::move(segments)) {
    if (segments_.empty()) throw Error(ErrorCode::InvalidFilter, "filter has no segments");
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        const auto& s = segments_[i];
        if (s.empty()) throw Error(ErrorCode::InvalidFilter, "empty segment in '" + join(segments_) + "'");
        if (s == multi_level) {
            if (i + 1 != segments_.size())
                throw Error(ErrorCode::InvalidFilter, "'#' must be the last segment in '" + join(segments_) + "'");
            continue;
        }
        if (s == single_level) continue;
        if (s.find_first_of("+#/") != std::string::npos)
            throw Error(ErrorCode::InvalidFilter, "wildcard embedded in literal '" + s + "'");
    }
}

std::string TopicFilter::str() const {
    return join(segments_);
}

bool TopicFilter::has_wildcards() const noexcept {
    for (const auto& s : segments_)
        if (s == single_level || s == multi_level) return true;
    return false;
}

std::vector<std::string> TopicFilter::literal_prefix() const {
    std::vector<std::string> out;
    for (const auto& s : segments_) {
        if (s == single_level || s == multi_level) break;
        out.push_back(s);
    }
    return out;
}

TopicFilter parse_topic_filter(std::string_view text) {
    return TopicFilter(split(text, '/'));
}

Topic topic_from_uri_path(std::span<const std::string> segments) {
    if (segments.empty()) throw Error(ErrorCode::EmptyPath, "Uri-Path has no segments");
    std::vector<std::string> out;
    out.reserve(segments.size() + 1);
    out.emplace_back(raw_namespace);
    for (const auto& s : segments) {
        if (auto why = segment_problem(s); !why.empty())
            throw Error(ErrorCode::InvalidSegment, std::string(why) + ": '" + s + "'");
        out.push_back(s);
    }
    return Topic(std::move(out));
}

namespace {

Topic swap_namespace(const Topic& t, std::string_view from, std::string_view to) {
    if (t.front() != from)
        throw Error(ErrorCode::NotRawTopic, "topic '" + t.str() + "' is not under '" + std::string(from) + "'");
    auto segments = t.segments();
    segments.front() = std::string(to);
    return Topic(std::move(segments));
}

}  // namespace

Topic north_topic_for(const Topic& raw) {
    return swap_namespace(raw, raw_namespace, north_namespace);
}

Topic raw_topic_for(const Topic& north) {
    return swap_namespace(north, north_namespace, raw_namespace);
}

bool is_absolute_iri(std::string_view iri) noexcept {
    const auto colon = iri.find(':');
    if (colon == std::string_view::npos || colon == 0) return false;
    auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); };
    if (!alpha(iri[0])) return false;
    for (std::size_t i = 1; i < colon; ++i) {
        const char c = iri[i];
        if (!alpha(c) && !(c >= '0' && c <= '9') && c != '+' && c != '-' && c != '.') return false;
    }
    return colon + 1 < iri.size();
}

}  // namespace sgs
