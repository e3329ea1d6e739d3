#pragma once

// Northbound REST interface over the message store, with OAuth2
// client-credentials token issuance.
//
//   POST /oauth/token              grant_type=client_credentials&client_id=..&client_secret=..
//   GET  /topics                   {"topics":[...]} visible to the caller
//   GET  /topics/{topic...}/latest annotated JSON-LD; ?view=record adds the raw twin
//   GET  /sensors/{id}             SSN sensor description
//   GET  /context.jsonld
//   GET  /healthz
//   GET  /metrics                  gateway counters

#include <atomic>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "sgs/auth.hpp"
#include "sgs/proxy.hpp"

namespace sgs::service {

struct HttpRequest {
    std::string method = "GET";
    std::string path;  // percent-decoded
    std::multimap<std::string, std::string> params;  // query string and form body
    std::optional<std::string> authorization;
};

struct HttpResponse {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
    std::vector<std::pair<std::string, std::string>> headers;
};

/// "Bearer <token>" -> token. The scheme is case-insensitive.
std::optional<std::string> bearer_token(std::string_view authorization);

class RestApi {
public:
    RestApi(proxy::Gateway& gateway, AccessControl& access) : gateway_(gateway), access_(access) {}

    HttpResponse handle(const HttpRequest& request, Instant now);

    HttpResponse issue_token(const HttpRequest& request, Instant now);
    HttpResponse list_topics(const std::optional<std::string>& token, Instant now) const;
    HttpResponse latest(std::span<const std::string> topic_segments, const std::optional<std::string>& token,
                        bool record_view, Instant now) const;
    HttpResponse sensor(std::string_view sensor_id) const;
    HttpResponse metrics() const;

private:
    proxy::Gateway& gateway_;
    AccessControl& access_;
};

class HttpServer {
public:
    HttpServer(RestApi& api, std::string host, std::uint16_t port);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    void start();
    void stop();
    [[nodiscard]] std::uint16_t port() const noexcept { return port_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::uint16_t port_ = 0;
    std::thread thread_;
    std::atomic<bool> running_{false};
};

}  // namespace sgs::service
