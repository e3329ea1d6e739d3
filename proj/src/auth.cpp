#include "sgs/auth.hpp"

#include <algorithm>
#include <array>
#include <random>

#include "sgs/error.hpp"

namespace sgs::service {

namespace {

bool is_prefix(std::span<const std::string> prefix, std::span<const std::string> of) {
    return prefix.size() <= of.size() && std::equal(prefix.begin(), prefix.end(), of.begin());
}

// Can some topic matched by `filter` start with `prefix`?
bool intersects(std::span<const std::string> prefix, const TopicFilter& filter) {
    const auto& f = filter.segments();
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (i >= f.size()) return false;
        if (f[i] == TopicFilter::multi_level) return true;
        if (f[i] != TopicFilter::single_level && f[i] != prefix[i]) return false;
    }
    return true;
}

bool constant_time_equal(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    unsigned char diff = 0;
    for (std::size_t i = 0; i < a.size(); ++i) diff |= static_cast<unsigned char>(a[i] ^ b[i]);
    return diff == 0;
}

// 256 bits from the OS entropy source, hex encoded.
std::string random_token() {
    static thread_local std::random_device rd;
    constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (int i = 0; i < 8; ++i) {
        auto word = rd();
        for (int j = 0; j < 8; ++j) {
            out += hex[word & 0xF];
            word >>= 4;
        }
    }
    return out;
}

}  // namespace

std::string_view to_string(DenyReason r) noexcept {
    switch (r) {
        case DenyReason::missing_token: return "missing_token";
        case DenyReason::invalid_token: return "invalid_token";
        case DenyReason::expired: return "expired";
        case DenyReason::out_of_scope: return "out_of_scope";
    }
    return "unknown";
}

void VisibilityMap::add(std::string_view prefix, Visibility v) {
    try {
        const auto topic = Topic::parse(prefix);
        auto segments = topic.segments();
        const auto it = std::find_if(rules_.begin(), rules_.end(), [&](const auto& r) { return r.first == segments; });
        if (it != rules_.end()) {
            it->second = v;
        } else {
            rules_.emplace_back(std::move(segments), v);
        }
    } catch (const Error& e) {
        throw Error(ErrorCode::InvalidConfig, "visibility prefix '" + std::string(prefix) + "': " + e.what());
    }
}

Visibility VisibilityMap::visibility(std::span<const std::string> segments) const {
    std::size_t best = 0;
    Visibility v = Visibility::public_;
    for (const auto& [prefix, vis] : rules_) {
        if (prefix.size() > best && is_prefix(prefix, segments)) {
            best = prefix.size();
            v = vis;
        }
    }
    return v;
}

Visibility VisibilityMap::visibility(const Topic& topic) const {
    return visibility(topic.segments());
}

VisibilityMap::FilterReach VisibilityMap::reach(const TopicFilter& filter) const {
    const auto literal = filter.literal_prefix();
    const auto base = visibility(literal);
    // Without wildcards only the literal topic itself can match.
    if (!filter.has_wildcards()) return base == Visibility::private_ ? FilterReach::private_only : FilterReach::public_only;
    for (const auto& [prefix, vis] : rules_) {
        if (prefix.size() > literal.size() && vis != base && intersects(prefix, filter)) return FilterReach::mixed;
    }
    return base == Visibility::private_ ? FilterReach::private_only : FilterReach::public_only;
}

TokenStore::TokenStore(std::vector<ClientCredential> clients, std::chrono::seconds ttl) : ttl_(ttl) {
    for (auto& c : clients) {
        for (const auto& scope : c.scopes) {
            try {
                (void)Topic::parse(scope);
            } catch (const Error& e) {
                throw Error(ErrorCode::InvalidConfig, "client '" + c.client_id + "' scope '" + scope + "': " + e.what());
            }
        }
        auto id = c.client_id;
        if (!clients_.emplace(std::move(id), std::move(c)).second)
            throw Error(ErrorCode::InvalidConfig, "duplicate OAuth client id");
    }
}

AuthToken TokenStore::issue(std::string_view client_id, std::string_view client_secret, Instant now) {
    const auto it = clients_.find(client_id);
    if (it == clients_.end() || !constant_time_equal(it->second.client_secret, client_secret))
        throw Error(ErrorCode::InvalidClient, "client authentication failed");

    AuthToken t{{}, it->second.client_id, now + std::chrono::duration_cast<std::chrono::microseconds>(ttl_),
                it->second.scopes};
    std::lock_guard lock(mutex_);
    do {
        t.token = random_token();
    } while (tokens_.contains(t.token));
    tokens_.emplace(t.token, t);
    return t;
}

std::optional<AuthToken> TokenStore::find(std::string_view token) const {
    std::lock_guard lock(mutex_);
    const auto it = tokens_.find(token);
    if (it == tokens_.end()) return std::nullopt;
    return it->second;
}

std::size_t TokenStore::purge_expired(Instant now) {
    std::lock_guard lock(mutex_);
    return std::erase_if(tokens_, [&](const auto& kv) { return kv.second.expires_at <= now; });
}

AuthDecision TokenStore::check(std::optional<std::string_view> token, std::span<const std::string> topic,
                               Instant now) const {
    if (!token || token->empty()) return AuthDecision::deny(DenyReason::missing_token);
    const auto t = find(*token);
    if (!t) return AuthDecision::deny(DenyReason::invalid_token);
    if (now >= t->expires_at) return AuthDecision::deny(DenyReason::expired);
    for (const auto& scope : t->scopes) {
        if (is_prefix(Topic::parse(scope).segments(), topic)) return AuthDecision::allow();
    }
    return AuthDecision::deny(DenyReason::out_of_scope);
}

AuthDecision AccessControl::authorize(std::optional<std::string_view> token, const Topic& topic, Instant now) const {
    if (visibility_.visibility(topic) == Visibility::public_) return AuthDecision::allow();
    return tokens_.check(token, topic.segments(), now);
}

AuthDecision AccessControl::authorize_filter(std::optional<std::string_view> token, const TopicFilter& filter,
                                             Instant now) const {
    switch (visibility_.reach(filter)) {
        case VisibilityMap::FilterReach::public_only:
        case VisibilityMap::FilterReach::mixed:
            return AuthDecision::allow();
        case VisibilityMap::FilterReach::private_only:
            break;
    }
    return tokens_.check(token, filter.literal_prefix(), now);
}

}  // namespace sgs::service
