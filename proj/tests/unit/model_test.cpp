#include <gtest/gtest.h>

#include "error_of.hpp"
#include "generators.hpp"
#include "sgs/error.hpp"
#include "sgs/model.hpp"

namespace sgs {
namespace {

using testing::error_of;

TEST(UriPath, MapsIntoRawNamespace) {
    const std::vector<std::string> path{"sensors", "s1", "temp"};
    EXPECT_EQ(topic_from_uri_path(path).str(), "raw/sensors/s1/temp");
}

TEST(UriPath, EmptyPathRejected) {
    EXPECT_EQ(error_of([] { topic_from_uri_path({}); }), ErrorCode::EmptyPath);
}

TEST(UriPath, ReservedCharacterRejected) {
    const std::vector<std::string> path{"a+b"};
    EXPECT_EQ(error_of([&] { topic_from_uri_path(path); }), ErrorCode::InvalidSegment);
    const std::vector<std::string> hash{"x", "#"};
    EXPECT_EQ(error_of([&] { topic_from_uri_path(hash); }), ErrorCode::InvalidSegment);
    const std::vector<std::string> empty{"x", ""};
    EXPECT_EQ(error_of([&] { topic_from_uri_path(empty); }), ErrorCode::InvalidSegment);
}

TEST(NorthTopic, SwapsNamespace) {
    EXPECT_EQ(north_topic_for(Topic::parse("raw/sensors/s1/temp")).str(), "obs/sensors/s1/temp");
    EXPECT_EQ(north_topic_for(Topic::parse("raw/a")).str(), "obs/a");
    EXPECT_EQ(error_of([] { north_topic_for(Topic::parse("obs/x")); }), ErrorCode::NotRawTopic);
    EXPECT_EQ(raw_topic_for(Topic::parse("obs/a/b")).str(), "raw/a/b");
    EXPECT_EQ(error_of([] { raw_topic_for(Topic::parse("raw/a")); }), ErrorCode::NotRawTopic);
}

TEST(NorthTopic, RoundTripsOverRandomPaths) {
    testing::Rng rng(11);
    for (int i = 0; i < 500; ++i) {
        const auto t = testing::random_topic(rng, 6, 8);
        const auto raw = topic_from_uri_path(t.segments());
        const auto north = north_topic_for(raw);
        EXPECT_EQ(north.size(), t.size() + 1);
        EXPECT_EQ(raw_topic_for(north), raw);
    }
}

TEST(Topic, ParseAndValidate) {
    EXPECT_EQ(Topic::parse("a/b/c").segments(), (std::vector<std::string>{"a", "b", "c"}));
    EXPECT_EQ(error_of([] { Topic::parse(""); }), ErrorCode::InvalidTopic);
    EXPECT_EQ(error_of([] { Topic::parse("a//b"); }), ErrorCode::InvalidTopic);
    EXPECT_EQ(error_of([] { Topic::parse("a/+"); }), ErrorCode::InvalidTopic);
    EXPECT_EQ(error_of([] { Topic::parse("a/"); }), ErrorCode::InvalidTopic);
}

TEST(Topic, SegmentwisePrefix) {
    const auto t = Topic::parse("a/b/c");
    EXPECT_TRUE(t.has_prefix(Topic::parse("a/b")));
    EXPECT_TRUE(t.has_prefix(Topic::parse("a/b/c")));
    EXPECT_FALSE(t.has_prefix(Topic::parse("a/bc")));
    EXPECT_FALSE(Topic::parse("a/bc").has_prefix(Topic::parse("a/b")));
    EXPECT_FALSE(t.has_prefix(Topic::parse("a/b/c/d")));
}

TEST(TopicFilter, Parse) {
    EXPECT_EQ(parse_topic_filter("raw/sensors/+/temp").segments(),
              (std::vector<std::string>{"raw", "sensors", "+", "temp"}));
    EXPECT_EQ(parse_topic_filter("raw/#").segments(), (std::vector<std::string>{"raw", "#"}));
    EXPECT_EQ(error_of([] { parse_topic_filter("raw/#/x"); }), ErrorCode::InvalidFilter);
    EXPECT_EQ(error_of([] { parse_topic_filter("a#"); }), ErrorCode::InvalidFilter);
    EXPECT_EQ(error_of([] { parse_topic_filter("x+y/z"); }), ErrorCode::InvalidFilter);
    EXPECT_EQ(error_of([] { parse_topic_filter("a//b"); }), ErrorCode::InvalidFilter);
}

TEST(TopicFilter, LiteralPrefixStopsAtFirstWildcard) {
    EXPECT_EQ(parse_topic_filter("obs/sensors/+/x").literal_prefix(), (std::vector<std::string>{"obs", "sensors"}));
    EXPECT_TRUE(parse_topic_filter("obs/#").has_wildcards());
    EXPECT_FALSE(parse_topic_filter("obs/a").has_wildcards());
}

TEST(Rfc3339, ParsesAndNormalizes) {
    EXPECT_EQ(format_rfc3339(parse_rfc3339("2014-06-01T12:00:00Z")), "2014-06-01T12:00:00Z");
    EXPECT_EQ(format_rfc3339(parse_rfc3339("2014-06-01T14:00:00+02:00")), "2014-06-01T12:00:00Z");
    EXPECT_EQ(format_rfc3339(parse_rfc3339("2014-06-01T12:00:00.250Z")), "2014-06-01T12:00:00.25Z");
    EXPECT_EQ(format_rfc3339(parse_rfc3339("2014-06-01t00:30:00-01:00")), "2014-06-01T01:30:00Z");
}

TEST(Rfc3339, RejectsMalformed) {
    for (const char* bad : {"2014-06-01", "2014-13-01T00:00:00Z", "2014-06-01T12:00:00", "2014-02-30T00:00:00Z",
                            "2014-06-01T12:00:00.Z", "2014-06-01T12:00:00Zjunk"}) {
        EXPECT_EQ(error_of([&] { parse_rfc3339(bad); }), ErrorCode::ParseError) << bad;
    }
}

TEST(Rfc3339, FormatRoundTrips) {
    testing::Rng rng(3);
    for (int i = 0; i < 500; ++i) {
        const Instant t{std::chrono::microseconds{static_cast<std::int64_t>(rng()) * 1'000'000 + rng() % 1'000'000}};
        EXPECT_EQ(parse_rfc3339(format_rfc3339(t)), t);
    }
}

TEST(Iri, Absolute) {
    EXPECT_TRUE(is_absolute_iri("http://example.org/x"));
    EXPECT_TRUE(is_absolute_iri("urn:x"));
    EXPECT_FALSE(is_absolute_iri("example.org/x"));
    EXPECT_FALSE(is_absolute_iri(":x"));
    EXPECT_FALSE(is_absolute_iri("1a:x"));
}

}  // namespace
}  // namespace sgs
