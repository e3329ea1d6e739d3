#include <gtest/gtest.h>

#include "sgs/coap_endpoint.hpp"

namespace sgs::coap {
namespace {

Message request(Code code, std::vector<std::string> path, std::string payload = {},
                MessageType type = MessageType::con) {
    Message m;
    m.type = type;
    m.code = code;
    m.message_id = 0x1234;
    m.token = {0xCA, 0xFE};
    m.set_uri_path(path);
    m.payload = Bytes(payload.begin(), payload.end());
    return m;
}

class CoapHandlerTest : public ::testing::Test {
protected:
    RequestOutcome handle(const Message& m) { return handle_request(m, "127.0.0.1:40000", store, is_private, 77, now_utc()); }

    proxy::MessageStore store;
    PrivacyCheck is_private = [](const Topic& t) { return t.has_prefix(Topic::parse("obs/sensors/p1")); };
};

TEST_F(CoapHandlerTest, PostIngests) {
    const auto out = handle(request(codes::post, {"sensors", "s1", "temp"}, R"({"value":22.5})"));
    EXPECT_EQ(out.response.type, MessageType::ack);
    EXPECT_EQ(out.response.message_id, 0x1234);
    EXPECT_EQ(out.response.token, (Bytes{0xCA, 0xFE}));
    EXPECT_EQ(out.response.code, codes::changed);
    ASSERT_TRUE(out.effects.ingest);
    EXPECT_EQ(out.effects.ingest->topic.str(), "raw/sensors/s1/temp");
    EXPECT_EQ(out.effects.ingest->payload, R"({"value":22.5})");
    EXPECT_EQ(out.effects.ingest->content_format, PayloadFormat::json);
    EXPECT_EQ(out.effects.ingest->source_protocol, Protocol::coap);
}

TEST_F(CoapHandlerTest, NonRequestGetsNonResponse) {
    const auto out = handle(request(codes::post, {"a"}, "<reading value=\"1\"/>", MessageType::non));
    EXPECT_EQ(out.response.type, MessageType::non);
    EXPECT_EQ(out.response.message_id, 77);
    ASSERT_TRUE(out.effects.ingest);
    EXPECT_EQ(out.effects.ingest->content_format, PayloadFormat::xml);
}

TEST_F(CoapHandlerTest, ContentFormatSelectsParser) {
    auto m = request(codes::post, {"a"}, R"({"value":1})");
    m.add_uint_option(option::content_format, content_format::xml);
    EXPECT_EQ(handle(m).effects.ingest->content_format, PayloadFormat::xml);

    auto bad = request(codes::post, {"a"}, "x");
    bad.add_uint_option(option::content_format, 0);  // text/plain
    const auto out = handle(bad);
    EXPECT_EQ(out.response.code, codes::unsupported_content_format);
    EXPECT_FALSE(out.effects.ingest);
}

TEST_F(CoapHandlerTest, PostWithoutPayload) {
    const auto out = handle(request(codes::post, {"a"}));
    EXPECT_EQ(out.response.code, codes::bad_request);
    EXPECT_FALSE(out.effects.ingest);
}

TEST_F(CoapHandlerTest, GetBeforePostIsNotFound) {
    EXPECT_EQ(handle(request(codes::get, {"sensors", "s1", "temp"})).response.code, codes::not_found);
}

TEST_F(CoapHandlerTest, UnsupportedMethod) {
    EXPECT_EQ(handle(request(codes::put, {"sensors", "s1", "temp"}, "x")).response.code, codes::method_not_allowed);
    EXPECT_EQ(handle(request(codes::del, {"sensors"})).response.code, codes::method_not_allowed);
}

TEST_F(CoapHandlerTest, EmptyPathIsBadRequest) {
    EXPECT_EQ(handle(request(codes::get, {})).response.code, codes::bad_request);
    EXPECT_EQ(handle(request(codes::get, {"a+b"})).response.code, codes::bad_request);
}

TEST_F(CoapHandlerTest, UnknownOptions) {
    auto critical = request(codes::get, {"a"});
    critical.add_option(9, {});
    EXPECT_EQ(handle(critical).response.code, codes::bad_option);

    store.append(Topic::parse("raw/a"), R"({"value":1})", "{}", now_utc());
    auto elective = request(codes::get, {"a"});
    elective.add_option(8, {1});
    EXPECT_EQ(handle(elective).response.code, codes::content);
}

TEST_F(CoapHandlerTest, GetServesRawPayload) {
    store.append(Topic::parse("raw/sensors/s1/temp"), "<reading value=\"3\"/>", "{}", now_utc());
    const auto out = handle(request(codes::get, {"sensors", "s1", "temp"}));
    EXPECT_EQ(out.response.code, codes::content);
    EXPECT_EQ(std::string(out.response.payload.begin(), out.response.payload.end()), "<reading value=\"3\"/>");
    EXPECT_EQ(out.response.uint_option(option::content_format), content_format::xml);
    EXPECT_FALSE(out.response.has_option(option::observe));
    EXPECT_FALSE(out.effects.observe);
}

TEST_F(CoapHandlerTest, ObserveRegisterAndDeregister) {
    store.append(Topic::parse("raw/sensors/s1/temp"), R"({"value":1})", "{}", now_utc());
    auto reg = request(codes::get, {"sensors", "s1", "temp"});
    reg.add_uint_option(option::observe, 0);
    const auto out = handle(reg);
    EXPECT_EQ(out.response.code, codes::content);
    EXPECT_EQ(out.response.uint_option(option::observe), 0u);
    ASSERT_TRUE(out.effects.observe);
    EXPECT_EQ(out.effects.observe->topic.str(), "raw/sensors/s1/temp");
    EXPECT_EQ(out.effects.observe->token, (Bytes{0xCA, 0xFE}));
    EXPECT_EQ(out.effects.observe->remote, "127.0.0.1:40000");

    auto dereg = request(codes::get, {"sensors", "s1", "temp"});
    dereg.add_uint_option(option::observe, 1);
    const auto out2 = handle(dereg);
    EXPECT_TRUE(out2.effects.deregister);
    EXPECT_FALSE(out2.effects.observe);
}

TEST_F(CoapHandlerTest, PrivateResourceGetIsUnauthorized) {
    store.append(Topic::parse("raw/sensors/p1/temp"), R"({"value":1})", "{}", now_utc());
    const auto out = handle(request(codes::get, {"sensors", "p1", "temp"}));
    EXPECT_EQ(out.response.code, codes::unauthorized);
    EXPECT_TRUE(out.response.payload.empty());
}

TEST(ContentFormatFor, Sniffs) {
    EXPECT_EQ(content_format_for("<a/>"), content_format::xml);
    EXPECT_EQ(content_format_for("{}"), content_format::json);
}

}  // namespace
}  // namespace sgs::coap
