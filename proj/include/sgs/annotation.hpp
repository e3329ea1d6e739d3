#pragma once

// Semantic annotation: raw payload -> SensorReading -> SSN observation graph
// -> deterministic JSON-LD, plus the validating inverse.
//
// Normative observation shape (blank nodes _:obs, _:out, _:val):
//
//   _:obs rdf:type                  ssn:Observation
//   _:obs ssn:observedBy            <sensor>
//   _:obs ssn:observedProperty      <property>
//   _:obs ssn:featureOfInterest     <feature>
//   _:obs ssn:observationResult     _:out
//   _:out rdf:type                  ssn:SensorOutput
//   _:out ssn:hasValue              _:val
//   _:val rdf:type                  ssn:ObservationValue
//   _:val dul:hasDataValue          "<value>"^^xsd:decimal
//   _:obs ssn:observationResultTime "<time>"^^xsd:dateTime
//
// plus exactly one unit triple on _:val: qudt:unit <unit> when the domain
// ontology maps the unit code, otherwise sgs:unitCode "<code>".

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sgs/model.hpp"
#include "sgs/rdf.hpp"

namespace sgs::annotation {

class SensorRegistry {
public:
    SensorRegistry() = default;
    explicit SensorRegistry(std::vector<SensorRegistryEntry> entries);

    /// Throws InvalidConfig on duplicate ids or relative IRIs.
    void add(SensorRegistryEntry entry);
    [[nodiscard]] const SensorRegistryEntry* find(std::string_view sensor_id) const;
    [[nodiscard]] const std::map<std::string, SensorRegistryEntry, std::less<>>& entries() const noexcept {
        return entries_;
    }

private:
    std::map<std::string, SensorRegistryEntry, std::less<>> entries_;
};

struct DomainOntologyMap {
    std::map<std::string, std::string, std::less<>> properties;  // property name -> IRI
    std::map<std::string, std::string, std::less<>> units;       // unit code -> IRI

    [[nodiscard]] std::optional<std::string> property_iri(std::string_view name) const;
    [[nodiscard]] std::optional<std::string> unit_iri(std::string_view code) const;

    /// Makes property lookups total over the registry, filling gaps from each
    /// entry's own property IRI. Throws InvalidConfig on conflicting IRIs.
    void complete_from(const SensorRegistry& registry);
};

/// The topic segment naming the sensor: the one after "sensors" when present,
/// otherwise the segment after the namespace root.
std::optional<std::string> sensor_segment(const Topic& topic);

/// First non-blank byte '<' selects XML, anything else JSON.
PayloadFormat sniff_format(std::string_view payload) noexcept;

/// Fields as they appear in a raw payload, before registry fallbacks.
struct PayloadFields {
    std::optional<std::string> sensor;
    std::optional<std::string> property;
    std::optional<std::string> unit;
    std::optional<std::string> time;
    double value = 0;
};

/// Throws ParseError on syntax errors or a missing/non-numeric value.
PayloadFields read_payload_fields(std::string_view payload, PayloadFormat format);

/// Accepts {"sensor","value","unit","time"[,"property"]} JSON objects or
/// <reading sensor=".." value=".." unit=".." time=".."/> (attributes or child
/// elements). Missing sensor/unit come from the registry entry selected by the
/// topic's sensor segment; missing time falls back to `arrival`.
/// Throws ParseError.
SensorReading parse_reading(std::string_view payload, PayloadFormat format, const Topic& topic,
                            const SensorRegistry& registry, Instant arrival);

/// Shortest fixed-notation decimal that round-trips ("22.5", "-3", "0.001").
std::string format_decimal(double value);

/// Throws UnknownProperty when the domain map has no IRI for the property.
rdf::Graph annotate(const SensorReading& reading, const SensorRegistryEntry& entry, const DomainOntologyMap& dom);

/// Looks the entry up first. Throws UnknownSensor / UnknownProperty.
rdf::Graph annotate(const SensorReading& reading, const SensorRegistry& registry, const DomainOntologyMap& dom);

struct ShapeReport {
    std::vector<std::string> missing;  // named mandatory triples that are absent
    bool has_unit = false;
    std::size_t extra = 0;             // triples outside the mandatory+unit shape

    [[nodiscard]] bool valid() const noexcept { return missing.empty(); }
    /// Exactly the 10 mandatory triples plus one unit triple.
    [[nodiscard]] bool exact() const noexcept { return missing.empty() && has_unit && extra == 0; }
};

ShapeReport check_shape(const rdf::Graph& g);

/// Fixed @context mapping the prefixes used by the gateway.
const std::map<std::string, std::string, std::less<>>& context_prefixes();
/// {"@context":{...}} as served at /context.jsonld.
std::string context_document();

/// Generic flattened JSON-LD: {"@context":..,"@graph":[nodes sorted by @id]},
/// sorted keys, no whitespace.
std::string serialize_jsonld(const rdf::Graph& g);

/// Inverse of serialize_jsonld without shape checks. Throws InvalidJsonLd.
rdf::Graph parse_jsonld(std::string_view document);

/// Validates the observation shape, then serializes. Throws InvalidGraph.
std::string to_jsonld(const rdf::Graph& g);

/// Parses and validates the observation shape. Throws InvalidJsonLd naming
/// the first missing triple.
rdf::Graph from_jsonld(std::string_view document);

/// SSN sensor description for REST discovery.
std::string sensor_description_jsonld(const SensorRegistryEntry& entry, const DomainOntologyMap& dom);

/// Output serialization for annotated graphs. JSON-LD is the only built-in
/// implementation; other encodings plug in here.
class GraphSerializer {
public:
    virtual ~GraphSerializer() = default;
    [[nodiscard]] virtual std::string_view media_type() const noexcept = 0;
    [[nodiscard]] virtual std::string serialize(const rdf::Graph& g) const = 0;
};

class JsonLdSerializer final : public GraphSerializer {
public:
    [[nodiscard]] std::string_view media_type() const noexcept override { return "application/ld+json"; }
    [[nodiscard]] std::string serialize(const rdf::Graph& g) const override { return to_jsonld(g); }
};

}  // namespace sgs::annotation
