#include "sgs/rest.hpp"

#include <algorithm>
#include <cctype>

#include <spdlog/spdlog.h>

#include "httplib.h"
#include "json.hpp"
#include "sgs/annotation.hpp"
#include "sgs/error.hpp"

namespace sgs::service {

namespace {

using json = nlohmann::json;

constexpr std::string_view jsonld_type = "application/ld+json";

HttpResponse json_response(int status, const json& body) {
    return HttpResponse{status, "application/json", body.dump(), {}};
}

HttpResponse error_response(int status, std::string_view error, std::string_view description) {
    return json_response(status, json{{"error", error}, {"error_description", description}});
}

HttpResponse denied(DenyReason reason) {
    if (reason == DenyReason::out_of_scope) {
        auto r = error_response(403, "insufficient_scope", "token scope does not cover this topic");
        r.headers.emplace_back("WWW-Authenticate", R"(Bearer error="insufficient_scope")");
        return r;
    }
    auto r = error_response(401, "invalid_token", to_string(reason));
    r.headers.emplace_back("WWW-Authenticate", reason == DenyReason::missing_token
                                                   ? std::string(R"(Bearer realm="sgs")")
                                                   : std::string(R"(Bearer error="invalid_token")"));
    return r;
}

std::vector<std::string> split_path(std::string_view path) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= path.size()) {
        const auto slash = path.find('/', start);
        const auto end = slash == std::string_view::npos ? path.size() : slash;
        out.emplace_back(path.substr(start, end - start));
        if (slash == std::string_view::npos) break;
        start = slash + 1;
    }
    if (!out.empty() && out.front().empty()) out.erase(out.begin());
    return out;
}

std::optional<std::string> param(const HttpRequest& r, const std::string& key) {
    const auto it = r.params.find(key);
    if (it == r.params.end()) return std::nullopt;
    return it->second;
}

}  // namespace

std::optional<std::string> bearer_token(std::string_view authorization) {
    constexpr std::string_view scheme = "bearer ";
    if (authorization.size() <= scheme.size()) return std::nullopt;
    for (std::size_t i = 0; i < scheme.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(authorization[i])) != scheme[i]) return std::nullopt;
    auto token = authorization.substr(scheme.size());
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
    if (token.empty()) return std::nullopt;
    return std::string(token);
}

HttpResponse RestApi::handle(const HttpRequest& request, Instant now) {
    const auto segments = split_path(request.path);
    const auto token = request.authorization ? bearer_token(*request.authorization) : std::nullopt;
    const bool get = request.method == "GET" || request.method == "HEAD";

    auto method_not_allowed = [](std::string_view allow) {
        auto r = error_response(405, "method_not_allowed", "method not allowed");
        r.headers.emplace_back("Allow", allow);
        return r;
    };

    if (segments.size() == 2 && segments[0] == "oauth" && segments[1] == "token") {
        if (request.method != "POST") return method_not_allowed("POST");
        return issue_token(request, now);
    }
    if (segments.size() == 1 && segments[0] == "healthz") {
        if (!get) return method_not_allowed("GET");
        return HttpResponse{200, "text/plain", "ok", {}};
    }
    if (segments.size() == 1 && segments[0] == "context.jsonld") {
        if (!get) return method_not_allowed("GET");
        return HttpResponse{200, std::string(jsonld_type), annotation::context_document(), {}};
    }
    if (segments.size() == 1 && segments[0] == "metrics") {
        if (!get) return method_not_allowed("GET");
        return metrics();
    }
    if (segments.size() == 1 && segments[0] == "topics") {
        if (!get) return method_not_allowed("GET");
        return list_topics(token, now);
    }
    if (segments.size() >= 3 && segments[0] == "topics" && segments.back() == "latest") {
        if (!get) return method_not_allowed("GET");
        const bool record = param(request, "view") == std::optional<std::string>("record");
        return latest(std::span(segments).subspan(1, segments.size() - 2), token, record, now);
    }
    if (segments.size() == 2 && segments[0] == "sensors") {
        if (!get) return method_not_allowed("GET");
        return sensor(segments[1]);
    }
    return error_response(404, "not_found", "no such resource");
}

HttpResponse RestApi::issue_token(const HttpRequest& request, Instant now) {
    const auto grant = param(request, "grant_type");
    if (!grant) return error_response(400, "invalid_request", "grant_type is required");
    if (*grant != "client_credentials")
        return error_response(400, "unsupported_grant_type", "only client_credentials is supported");
    const auto id = param(request, "client_id");
    const auto secret = param(request, "client_secret");
    if (!id || !secret) return error_response(400, "invalid_request", "client_id and client_secret are required");
    try {
        const auto token = access_.tokens().issue(*id, *secret, now);
        std::string scope;
        for (const auto& s : token.scopes) scope += (scope.empty() ? "" : " ") + s;
        auto r = json_response(200, json{{"access_token", token.token},
                                         {"token_type", "Bearer"},
                                         {"expires_in", access_.tokens().ttl().count()},
                                         {"scope", scope}});
        r.headers.emplace_back("Cache-Control", "no-store");
        return r;
    } catch (const Error& e) {
        if (e.code() != ErrorCode::InvalidClient) throw;
        auto r = error_response(401, "invalid_client", "client authentication failed");
        r.headers.emplace_back("WWW-Authenticate", R"(Basic realm="sgs")");
        return r;
    }
}

HttpResponse RestApi::list_topics(const std::optional<std::string>& token, Instant now) const {
    json topics = json::array();
    for (const auto& t : gateway_.router().known_topics()) {
        if (access_.authorize(token, t, now)) topics.push_back(t.str());
    }
    return json_response(200, json{{"topics", std::move(topics)}});
}

HttpResponse RestApi::latest(std::span<const std::string> topic_segments, const std::optional<std::string>& token,
                             bool record_view, Instant now) const {
    std::optional<Topic> topic;
    try {
        topic = Topic(std::vector<std::string>(topic_segments.begin(), topic_segments.end()));
    } catch (const Error& e) {
        return error_response(400, "invalid_topic", e.what());
    }
    if (topic->front() != north_namespace)
        return error_response(404, "not_found", "only obs/* topics are served");

    const auto decision = access_.authorize(token, *topic, now);
    if (!decision) return denied(*decision.reason);

    const auto stored = gateway_.store().fetch_latest(raw_topic_for(*topic));
    if (!stored) return error_response(404, "not_found", "no message on this topic yet");

    HttpResponse r;
    if (record_view) {
        r = json_response(200, json{{"topic", topic->str()},
                                    {"sequence", stored->sequence},
                                    {"received_at", format_rfc3339(stored->received_at)},
                                    {"raw", stored->raw_payload},
                                    {"annotated", stored->annotated_jsonld}});
    } else {
        r = HttpResponse{200, std::string(jsonld_type), stored->annotated_jsonld, {}};
    }
    r.headers.emplace_back("X-Sgs-Sequence", std::to_string(stored->sequence));
    return r;
}

HttpResponse RestApi::sensor(std::string_view sensor_id) const {
    const auto* entry = gateway_.registry().find(sensor_id);
    if (!entry) return error_response(404, "not_found", "unknown sensor");
    return HttpResponse{200, std::string(jsonld_type),
                        annotation::sensor_description_jsonld(*entry, gateway_.ontology()), {}};
}

HttpResponse RestApi::metrics() const {
    const auto& c = gateway_.counters();
    return json_response(200, json{{"ingested", c.ingested.load()},
                                   {"parse_errors", c.parse_errors.load()},
                                   {"annotation_errors", c.annotation_errors.load()},
                                   {"deliveries", c.deliveries.load()},
                                   {"drops", c.drops->load()},
                                   {"denied", c.denied.load()},
                                   {"dropped_publishes", c.dropped_publishes.load()},
                                   {"topics", gateway_.store().topic_count()},
                                   {"last_sequence", gateway_.store().last_sequence()}});
}

// ---------------------------------------------------------------------------

struct HttpServer::Impl {
    httplib::Server server;
};

HttpServer::HttpServer(RestApi& api, std::string host, std::uint16_t port) : impl_(std::make_unique<Impl>()) {
    auto dispatch = [&api](const httplib::Request& req, httplib::Response& res) {
        HttpRequest r;
        r.method = req.method;
        r.path = req.path;
        r.params.insert(req.params.begin(), req.params.end());
        if (req.has_header("Authorization")) r.authorization = req.get_header_value("Authorization");
        HttpResponse out;
        try {
            out = api.handle(r, now_utc());
        } catch (const std::exception& e) {
            spdlog::error("HTTP {} {} failed: {}", req.method, req.path, e.what());
            out = error_response(500, "server_error", "internal error");
        }
        res.status = out.status;
        for (const auto& [k, v] : out.headers) res.set_header(k, v);
        res.set_content(out.body, out.content_type);
    };
    impl_->server.Get(".*", dispatch);
    impl_->server.Post(".*", dispatch);
    impl_->server.Put(".*", dispatch);
    impl_->server.Delete(".*", dispatch);

    if (port == 0) {
        const int bound = impl_->server.bind_to_any_port(host);
        if (bound < 0) throw Error(ErrorCode::Io, "cannot bind HTTP on " + host);
        port_ = static_cast<std::uint16_t>(bound);
    } else {
        if (!impl_->server.bind_to_port(host, port))
            throw Error(ErrorCode::Io, "cannot bind HTTP on " + host + ":" + std::to_string(port));
        port_ = port;
    }
}

HttpServer::~HttpServer() {
    stop();
}

void HttpServer::start() {
    if (running_.exchange(true)) return;
    thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
    spdlog::info("REST interface listening on tcp/{}", port_);
}

void HttpServer::stop() {
    if (!running_.exchange(false)) return;
    impl_->server.stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace sgs::service
