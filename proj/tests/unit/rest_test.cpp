#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "json.hpp"
#include "sgs/annotation.hpp"
#include "sgs/rest.hpp"

namespace sgs::service {
namespace {

using namespace std::chrono_literals;
using json = nlohmann::json;

class RestTest : public ::testing::Test {
protected:
    HttpResponse get(const std::string& path, std::optional<std::string> token = std::nullopt,
                     std::multimap<std::string, std::string> params = {}) {
        HttpRequest r;
        r.path = path;
        r.params = std::move(params);
        if (token) r.authorization = "Bearer " + *token;
        return api.handle(r, now_utc());
    }

    void ingest(const std::string& raw, const std::string& payload) {
        ASSERT_TRUE(stack.gateway.ingest(testing::reading_event(raw, payload)).stored);
    }

    static std::optional<std::string> header(const HttpResponse& r, const std::string& name) {
        for (const auto& [k, v] : r.headers)
            if (k == name) return v;
        return std::nullopt;
    }

    testing::Stack stack;
    RestApi api{stack.gateway, stack.access};
};

TEST(BearerToken, Parsing) {
    EXPECT_EQ(bearer_token("Bearer abc"), "abc");
    EXPECT_EQ(bearer_token("bearer   abc "), "abc");
    EXPECT_EQ(bearer_token("Basic abc"), std::nullopt);
    EXPECT_EQ(bearer_token("Bearer "), std::nullopt);
    EXPECT_EQ(bearer_token(""), std::nullopt);
}

TEST_F(RestTest, TokenGrant) {
    HttpRequest r{"POST", "/oauth/token",
                  {{"grant_type", "client_credentials"}, {"client_id", "dashboard"}, {"client_secret", "dashboard-secret"}},
                  std::nullopt};
    const auto res = api.handle(r, now_utc());
    ASSERT_EQ(res.status, 200);
    const auto body = json::parse(res.body);
    EXPECT_EQ(body.at("token_type"), "Bearer");
    EXPECT_EQ(body.at("expires_in"), 3600);
    EXPECT_EQ(body.at("scope"), "obs/sensors/p1");
    EXPECT_TRUE(stack.tokens.find(body.at("access_token").get<std::string>()));
    EXPECT_EQ(header(res, "Cache-Control"), "no-store");
}

TEST_F(RestTest, TokenGrantErrors) {
    auto post = [&](std::multimap<std::string, std::string> p) {
        return api.handle(HttpRequest{"POST", "/oauth/token", std::move(p), std::nullopt}, now_utc());
    };
    auto res = post({{"grant_type", "client_credentials"}, {"client_id", "dashboard"}, {"client_secret", "nope"}});
    EXPECT_EQ(res.status, 401);
    EXPECT_EQ(json::parse(res.body).at("error"), "invalid_client");
    res = post({{"grant_type", "password"}});
    EXPECT_EQ(res.status, 400);
    EXPECT_EQ(json::parse(res.body).at("error"), "unsupported_grant_type");
    res = post({});
    EXPECT_EQ(res.status, 400);
    EXPECT_EQ(json::parse(res.body).at("error"), "invalid_request");
    EXPECT_EQ(get("/oauth/token").status, 405);
}

TEST_F(RestTest, FreshGatewayHasNoTopics) {
    const auto res = get("/topics");
    ASSERT_EQ(res.status, 200);
    EXPECT_EQ(json::parse(res.body).at("topics"), json::array());
}

TEST_F(RestTest, LatestMatchesStoredAnnotation) {
    ingest("raw/sensors/s1/temp", R"({"value":22.5})");
    const auto res = get("/topics/obs/sensors/s1/temp/latest");
    ASSERT_EQ(res.status, 200);
    EXPECT_EQ(res.content_type, "application/ld+json");
    const auto stored = stack.gateway.store().fetch_latest(Topic::parse("raw/sensors/s1/temp"));
    EXPECT_EQ(res.body, stored->annotated_jsonld);
    EXPECT_EQ(header(res, "X-Sgs-Sequence"), std::to_string(stored->sequence));
}

TEST_F(RestTest, RecordViewPairsRawAndAnnotated) {
    ingest("raw/sensors/s1/temp", R"({"value":1})");
    ingest("raw/sensors/s1/temp", R"({"value":2})");
    const auto res = get("/topics/obs/sensors/s1/temp/latest", std::nullopt, {{"view", "record"}});
    ASSERT_EQ(res.status, 200);
    const auto body = json::parse(res.body);
    EXPECT_EQ(body.at("raw"), R"({"value":2})");
    EXPECT_EQ(body.at("sequence"), 2);
    const auto g = annotation::from_jsonld(body.at("annotated").get<std::string>());
    EXPECT_NE(annotation::serialize_jsonld(g).find(R"("@value":"2")"), std::string::npos);
}

TEST_F(RestTest, LatestNotFoundCases) {
    EXPECT_EQ(get("/topics/obs/sensors/s1/temp/latest").status, 404);
    EXPECT_EQ(get("/topics/raw/sensors/s1/temp/latest").status, 404);
    EXPECT_EQ(get("/nowhere").status, 404);
    EXPECT_EQ(get("/topics/obs//x/latest").status, 400);
}

TEST_F(RestTest, PrivateTopicNeedsAuthorizedToken) {
    ingest("raw/sensors/p1/temp", R"({"value":19})");
    const auto path = "/topics/obs/sensors/p1/temp/latest";

    const auto anonymous = get(path);
    EXPECT_EQ(anonymous.status, 401);
    EXPECT_TRUE(header(anonymous, "WWW-Authenticate"));
    EXPECT_EQ(anonymous.body.find("19"), std::string::npos);

    EXPECT_EQ(get(path, "forged").status, 401);
    EXPECT_EQ(get(path, stack.token_for("dashboard", now_utc() - 2h)).status, 401);
    EXPECT_EQ(get(path, stack.token_for("auditor")).status, 403);
    const auto ok = get(path, stack.token_for("dashboard"));
    EXPECT_EQ(ok.status, 200);
    EXPECT_NE(ok.body.find("19"), std::string::npos);
}

TEST_F(RestTest, TopicListHidesPrivateTopics) {
    ingest("raw/sensors/s1/temp", R"({"value":1})");
    ingest("raw/sensors/p1/temp", R"({"value":2})");
    const auto anon = json::parse(get("/topics").body).at("topics");
    EXPECT_EQ(anon, json::array({"obs/sensors/s1/temp"}));
    const auto scoped = json::parse(get("/topics", stack.token_for("dashboard")).body).at("topics");
    EXPECT_EQ(scoped, json::array({"obs/sensors/p1/temp", "obs/sensors/s1/temp"}));
}

TEST_F(RestTest, SensorDescription) {
    const auto res = get("/sensors/s1");
    EXPECT_EQ(res.status, 200);
    EXPECT_EQ(res.content_type, "application/ld+json");
    EXPECT_EQ(get("/sensors/unknown").status, 404);
}

TEST_F(RestTest, ServiceEndpoints) {
    EXPECT_EQ(get("/healthz").body, "ok");
    const auto ctx = json::parse(get("/context.jsonld").body);
    EXPECT_TRUE(ctx.contains("@context"));
    ingest("raw/sensors/s1/temp", R"({"value":1})");
    stack.gateway.ingest(testing::reading_event("raw/sensors/s1/temp", "garbage"));
    const auto m = json::parse(get("/metrics").body);
    EXPECT_EQ(m.at("ingested"), 1);
    EXPECT_EQ(m.at("parse_errors"), 1);
    EXPECT_EQ(m.at("last_sequence"), 1);
}

TEST_F(RestTest, WrongMethod) {
    HttpRequest r{"DELETE", "/topics/obs/sensors/s1/temp/latest", {}, std::nullopt};
    const auto res = api.handle(r, now_utc());
    EXPECT_EQ(res.status, 405);
    EXPECT_EQ(header(res, "Allow"), "GET");
}

}  // namespace
}  // namespace sgs::service
