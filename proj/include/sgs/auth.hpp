#pragma once

// OAuth2 client-credentials tokens and the public/private topic gate shared
// by the REST interface and the MQTT micro broker.

#include <chrono>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sgs/model.hpp"

namespace sgs::service {

struct ClientCredential {
    std::string client_id;
    std::string client_secret;
    std::vector<std::string> scopes;  // topic prefixes, e.g. "obs/sensors/s1"
};

struct AuthToken {
    std::string token;
    std::string client_id;
    Instant expires_at{};
    std::vector<std::string> scopes;
};

/// Longest-prefix-wins visibility rules over topic prefixes; default public.
/// Prefix matching is segment-wise.
class VisibilityMap {
public:
    /// Throws InvalidConfig when the prefix is not a wildcard-free topic.
    void add(std::string_view prefix, Visibility v);
    [[nodiscard]] Visibility visibility(const Topic& topic) const;

    enum class FilterReach { public_only, private_only, mixed };
    /// Which visibility classes the topics matched by `filter` can fall into.
    [[nodiscard]] FilterReach reach(const TopicFilter& filter) const;

    [[nodiscard]] const std::vector<std::pair<std::vector<std::string>, Visibility>>& rules() const noexcept {
        return rules_;
    }

private:
    [[nodiscard]] Visibility visibility(std::span<const std::string> segments) const;

    std::vector<std::pair<std::vector<std::string>, Visibility>> rules_;
};

enum class DenyReason { missing_token, invalid_token, expired, out_of_scope };
std::string_view to_string(DenyReason r) noexcept;

struct AuthDecision {
    bool allowed = false;
    std::optional<DenyReason> reason;

    static AuthDecision allow() { return {true, std::nullopt}; }
    static AuthDecision deny(DenyReason r) { return {false, r}; }
    explicit operator bool() const noexcept { return allowed; }
};

class TokenStore {
public:
    explicit TokenStore(std::vector<ClientCredential> clients = {},
                        std::chrono::seconds ttl = std::chrono::seconds{3600});

    /// Throws InvalidClient for an unknown id or a wrong secret.
    AuthToken issue(std::string_view client_id, std::string_view client_secret, Instant now);
    [[nodiscard]] std::optional<AuthToken> find(std::string_view token) const;
    std::size_t purge_expired(Instant now);
    [[nodiscard]] std::chrono::seconds ttl() const noexcept { return ttl_; }

    /// Token decision for a topic already known to be private.
    [[nodiscard]] AuthDecision check(std::optional<std::string_view> token, std::span<const std::string> topic,
                                     Instant now) const;

private:
    std::map<std::string, ClientCredential, std::less<>> clients_;
    std::chrono::seconds ttl_;
    mutable std::mutex mutex_;
    std::map<std::string, AuthToken, std::less<>> tokens_;
};

class AccessControl {
public:
    AccessControl(VisibilityMap visibility, TokenStore& tokens) : visibility_(std::move(visibility)), tokens_(tokens) {}

    /// Public topics are always allowed; private ones need an unexpired token
    /// with a scope that is a segment-wise prefix of the topic.
    [[nodiscard]] AuthDecision authorize(std::optional<std::string_view> token, const Topic& topic, Instant now) const;

    /// Subscription-time gate. Filters that can only reach private topics are
    /// checked against their literal prefix; filters spanning both classes are
    /// admitted and gated per delivery.
    [[nodiscard]] AuthDecision authorize_filter(std::optional<std::string_view> token, const TopicFilter& filter,
                                                Instant now) const;

    [[nodiscard]] const VisibilityMap& visibility() const noexcept { return visibility_; }
    [[nodiscard]] TokenStore& tokens() noexcept { return tokens_; }
    [[nodiscard]] const TokenStore& tokens() const noexcept { return tokens_; }

private:
    VisibilityMap visibility_;
    TokenStore& tokens_;
};

}  // namespace sgs::service
