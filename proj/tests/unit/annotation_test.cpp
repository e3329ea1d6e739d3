#include <gtest/gtest.h>

#include <algorithm>
#include "json.hpp"

#include "error_of.hpp"
#include "fixtures.hpp"
#include "generators.hpp"
#include "sgs/annotation.hpp"
#include "sgs/rdf.hpp"

namespace sgs::annotation {
namespace {

using testing::error_of;

class AnnotationTest : public ::testing::Test {
protected:
    void SetUp() override {
        auto c = testing::sample_config();
        registry = c.registry;
        dom = c.ontology;
    }

    SensorReading read(std::string_view payload, PayloadFormat f, std::string_view topic = "raw/sensors/s1/temp") {
        return parse_reading(payload, f, Topic::parse(topic), registry, arrival);
    }

    SensorRegistry registry;
    DomainOntologyMap dom;
    Instant arrival = parse_rfc3339("2020-01-01T00:00:00Z");
};

constexpr std::string_view json_example = R"({"sensor":"s1","value":22.5,"unit":"Cel","time":"2014-06-01T12:00:00Z"})";
constexpr std::string_view xml_example =
    R"(<reading sensor="s1" value="22.5" unit="Cel" time="2014-06-01T12:00:00Z"/>)";

TEST_F(AnnotationTest, JsonReadingFieldMapping) {
    const auto r = read(json_example, PayloadFormat::json);
    EXPECT_EQ(r.sensor_id, "s1");
    EXPECT_EQ(r.observed_property, "temperature");
    EXPECT_EQ(r.value, 22.5);
    EXPECT_EQ(r.unit, "Cel");
    EXPECT_EQ(format_rfc3339(r.timestamp), "2014-06-01T12:00:00Z");
    EXPECT_FALSE(r.time_from_gateway);
}

TEST_F(AnnotationTest, XmlReadingMatchesJson) {
    auto j = read(json_example, PayloadFormat::json);
    auto x = read(xml_example, PayloadFormat::xml);
    EXPECT_EQ(x.source_format, PayloadFormat::xml);
    x.source_format = j.source_format;
    EXPECT_EQ(j, x);
}

TEST_F(AnnotationTest, XmlChildElements) {
    const auto r = read("<reading><sensor>s1</sensor><value>-3</value><unit>Cel</unit></reading>", PayloadFormat::xml);
    EXPECT_EQ(r.value, -3);
    EXPECT_TRUE(r.time_from_gateway);
    EXPECT_EQ(r.timestamp, arrival);
}

TEST_F(AnnotationTest, RegistryFallbacks) {
    const auto r = read(R"({"value":"40"})", PayloadFormat::json, "raw/sensors/s3/humidity");
    EXPECT_EQ(r.sensor_id, "s3");
    EXPECT_EQ(r.observed_property, "humidity");
    EXPECT_EQ(r.unit, "%RH");
    EXPECT_EQ(r.value, 40);
}

TEST_F(AnnotationTest, ParseErrors) {
    for (auto [payload, fmt] : std::vector<std::pair<std::string, PayloadFormat>>{
             {R"({"value":"hot"})", PayloadFormat::json},
             {R"({"sensor":"s1"})", PayloadFormat::json},
             {R"({"value":true})", PayloadFormat::json},
             {R"([1,2])", PayloadFormat::json},
             {"", PayloadFormat::json},
             {R"({"value":"nan"})", PayloadFormat::json},
             {R"({"value":1,"time":"yesterday"})", PayloadFormat::json},
             {R"({"value":1,"sensor":"nobody"})", PayloadFormat::json},
             {R"(<reading value="x"/>)", PayloadFormat::xml},
             {R"(<other value="1"/>)", PayloadFormat::xml},
             {R"(<reading value="1")", PayloadFormat::xml},
         }) {
        EXPECT_EQ(error_of([&] { read(payload, fmt); }), ErrorCode::ParseError) << payload;
    }
}

TEST(Sniff, FirstNonBlankByte) {
    EXPECT_EQ(sniff_format("  <reading/>"), PayloadFormat::xml);
    EXPECT_EQ(sniff_format(R"({"value":1})"), PayloadFormat::json);
    EXPECT_EQ(sniff_format(""), PayloadFormat::json);
}

TEST(SensorSegment, FromTopic) {
    EXPECT_EQ(sensor_segment(Topic::parse("raw/sensors/s1/temp")), "s1");
    EXPECT_EQ(sensor_segment(Topic::parse("raw/s9/x")), "s9");
    EXPECT_EQ(sensor_segment(Topic::parse("raw")), std::nullopt);
}

TEST(FormatDecimal, ShortestFixed) {
    EXPECT_EQ(format_decimal(22.5), "22.5");
    EXPECT_EQ(format_decimal(-3), "-3");
    EXPECT_EQ(format_decimal(0.001), "0.001");
    EXPECT_EQ(format_decimal(0.0), "0");
    EXPECT_EQ(format_decimal(-0.0), "0");
    EXPECT_EQ(format_decimal(1e21), "1000000000000000000000");
}

TEST_F(AnnotationTest, ElevenTriples) {
    const auto g = annotate(read(json_example, PayloadFormat::json), registry, dom);
    EXPECT_EQ(g.size(), 11u);
    const auto shape = check_shape(g);
    EXPECT_TRUE(shape.exact());
    EXPECT_TRUE(shape.has_unit);
    const rdf::Triple unit{rdf::Term::blank("val"), rdf::Term::named(rdf::iri(rdf::ns::qudt, "unit")),
                           rdf::Term::named("http://qudt.org/vocab/unit/DEG_C")};
    EXPECT_TRUE(g.contains(unit));
    const rdf::Triple value{rdf::Term::blank("val"), rdf::Term::named(rdf::iri(rdf::ns::dul, "hasDataValue")),
                            rdf::Term::literal("22.5", rdf::iri(rdf::ns::xsd, "decimal"))};
    EXPECT_TRUE(g.contains(value));
}

TEST_F(AnnotationTest, UnmappedUnitFallsBackToUnitCode) {
    const auto g = annotate(read(R"({"value":1,"unit":"furlong"})", PayloadFormat::json), registry, dom);
    EXPECT_EQ(g.size(), 11u);
    const rdf::Triple unit{rdf::Term::blank("val"), rdf::Term::named(rdf::iri(rdf::ns::sgs, "unitCode")),
                           rdf::Term::literal("furlong", rdf::iri(rdf::ns::xsd, "string"))};
    EXPECT_TRUE(g.contains(unit));
    EXPECT_TRUE(check_shape(g).exact());
}

TEST_F(AnnotationTest, ValueChangeAltersOneTriple) {
    auto r = read(json_example, PayloadFormat::json);
    const auto a = annotate(r, registry, dom);
    r.value = 23;
    const auto b = annotate(r, registry, dom);
    std::vector<rdf::Triple> only_a, only_b;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(only_a));
    std::set_difference(b.begin(), b.end(), a.begin(), a.end(), std::back_inserter(only_b));
    ASSERT_EQ(only_a.size(), 1u);
    ASSERT_EQ(only_b.size(), 1u);
    EXPECT_EQ(only_a[0].predicate.value, rdf::iri(rdf::ns::dul, "hasDataValue"));
    EXPECT_EQ(only_b[0].object.value, "23");
}

TEST_F(AnnotationTest, UnknownSensorAndProperty) {
    auto r = read(json_example, PayloadFormat::json);
    r.sensor_id = "ghost";
    EXPECT_EQ(error_of([&] { annotate(r, registry, dom); }), ErrorCode::UnknownSensor);
    r = read(json_example, PayloadFormat::json);
    r.observed_property = "luminance";
    EXPECT_EQ(error_of([&] { annotate(r, registry, dom); }), ErrorCode::UnknownProperty);
}

TEST_F(AnnotationTest, JsonLdDeterministicAndInvertible) {
    const auto g = annotate(read(json_example, PayloadFormat::json), registry, dom);
    const auto doc = to_jsonld(g);
    EXPECT_EQ(doc, to_jsonld(g));
    EXPECT_EQ(from_jsonld(doc), g);
    const auto parsed = nlohmann::json::parse(doc);
    EXPECT_EQ(parsed.at("@context").size(), context_prefixes().size());
    EXPECT_EQ(parsed.at("@graph").size(), 3u);
    EXPECT_EQ(doc.find_first_of(" \n"), std::string::npos);
}

TEST(JsonLd, EmptyGraphIsInvalid) {
    EXPECT_EQ(error_of([] { to_jsonld(rdf::Graph{}); }), ErrorCode::InvalidGraph);
}

TEST_F(AnnotationTest, MissingTripleIsNamed) {
    const auto g = annotate(read(json_example, PayloadFormat::json), registry, dom);
    rdf::Graph pruned;
    for (const auto& t : g)
        if (t.predicate.value != rdf::iri(rdf::ns::ssn, "observedBy")) pruned.add(t);
    const auto doc = serialize_jsonld(pruned);
    try {
        from_jsonld(doc);
        FAIL() << "accepted a document without ssn:observedBy";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidJsonLd);
        EXPECT_NE(std::string(e.what()).find("observedBy"), std::string::npos) << e.what();
    }
    EXPECT_EQ(error_of([&] { to_jsonld(pruned); }), ErrorCode::InvalidGraph);
}

TEST(JsonLd, RejectsGarbage) {
    for (const char* doc : {"", "[]", "{}", R"({"@graph":5})", "not json"})
        EXPECT_EQ(error_of([&] { from_jsonld(doc); }), ErrorCode::InvalidJsonLd) << doc;
}

// Recursively reverses or rotates object keys and shuffles arrays.
nlohmann::ordered_json permute(const nlohmann::ordered_json& j, testing::Rng& rng) {
    if (j.is_object()) {
        std::vector<std::string> keys;
        for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
        std::shuffle(keys.begin(), keys.end(), rng);
        nlohmann::ordered_json out = nlohmann::ordered_json::object();
        for (const auto& k : keys) out[k] = permute(j.at(k), rng);
        return out;
    }
    if (j.is_array()) {
        std::vector<nlohmann::ordered_json> items;
        for (const auto& v : j) items.push_back(permute(v, rng));
        std::shuffle(items.begin(), items.end(), rng);
        return items;
    }
    return j;
}

class FormatProperty : public AnnotationTest {};

TEST_F(FormatProperty, GeneratedReadingsAcrossFormats) {
    testing::Rng rng(2014);
    std::vector<std::string> sensors;
    for (const auto& [id, e] : registry.entries()) sensors.push_back(id);
    std::uniform_real_distribution<double> value(-1000, 1000);
    for (int i = 0; i < 500; ++i) {
        const auto& id = sensors[static_cast<std::size_t>(testing::uniform(rng, 0, static_cast<int>(sensors.size()) - 1))];
        const double v = testing::coin(rng) ? value(rng) : testing::uniform(rng, -50, 50) / 4.0;
        const std::string time = format_rfc3339(arrival + std::chrono::seconds{testing::uniform(rng, 0, 1 << 30)});
        const std::string unit = testing::coin(rng, 0.8) ? registry.find(id)->unit_code : "raw-units";

        nlohmann::json j{{"sensor", id}, {"value", v}, {"unit", unit}, {"time", time}};
        const std::string xml = "<reading sensor=\"" + id + "\" value=\"" + format_decimal(v) + "\" unit=\"" + unit +
                                "\" time=\"" + time + "\"/>";
        const auto topic = "raw/sensors/" + id + "/reading";

        const auto gj = annotate(read(j.dump(), PayloadFormat::json, topic), registry, dom);
        const auto gx = annotate(read(xml, PayloadFormat::xml, topic), registry, dom);
        const auto dj = to_jsonld(gj);
        ASSERT_EQ(dj, to_jsonld(gx)) << j.dump() << "\n" << xml;

        const auto back = from_jsonld(dj);
        ASSERT_EQ(back, gj);
        ASSERT_EQ(back.size(), 11u);
        ASSERT_TRUE(check_shape(back).exact());

        const auto shuffled = permute(nlohmann::ordered_json::parse(dj), rng).dump();
        ASSERT_EQ(from_jsonld(shuffled), gj) << shuffled;
    }
}

TEST_F(AnnotationTest, SensorDescription) {
    const auto doc = nlohmann::json::parse(sensor_description_jsonld(*registry.find("s1"), dom));
    const auto text = doc.dump();
    EXPECT_NE(text.find("http://example.org/sensors/s1"), std::string::npos);
    EXPECT_NE(text.find("air_temperature"), std::string::npos);
    EXPECT_NE(text.find("http://example.org/rooms/lab"), std::string::npos);
}

TEST(Registry, RejectsDuplicatesAndRelativeIris) {
    SensorRegistry r;
    SensorRegistryEntry e{"a", "temperature", "http://x/a", "http://x/p", "http://x/f", "Cel", Visibility::public_};
    r.add(e);
    EXPECT_EQ(error_of([&] { r.add(e); }), ErrorCode::InvalidConfig);
    e.sensor_id = "b";
    e.sensor_iri = "relative/b";
    EXPECT_EQ(error_of([&] { r.add(e); }), ErrorCode::InvalidConfig);
}

TEST(Ontology, CompleteFromRegistry) {
    SensorRegistry r;
    r.add({"a", "pressure", "http://x/a", "http://x/pressure", "http://x/f", "Pa", Visibility::public_});
    DomainOntologyMap dom;
    dom.complete_from(r);
    EXPECT_EQ(dom.property_iri("pressure"), "http://x/pressure");
    DomainOntologyMap conflicting;
    conflicting.properties["pressure"] = "http://y/other";
    EXPECT_EQ(error_of([&] { conflicting.complete_from(r); }), ErrorCode::InvalidConfig);
}

}  // namespace
}  // namespace sgs::annotation
