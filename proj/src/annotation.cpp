#include "sgs/annotation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "json.hpp"
#include "sgs/error.hpp"

namespace sgs::rdf {

std::string iri(std::string_view ns, std::string_view local) {
    std::string out(ns);
    out += local;
    return out;
}

std::string Term::str() const {
    switch (kind) {
        case Kind::iri: return "<" + value + ">";
        case Kind::blank: return "_:" + value;
        case Kind::literal: return "\"" + value + "\"^^<" + datatype + ">";
    }
    return {};
}

std::string Triple::str() const {
    return subject.str() + " " + predicate.str() + " " + object.str() + " .";
}

}  // namespace sgs::rdf

namespace sgs::annotation {

using nlohmann::json;
using rdf::Term;

namespace {

const std::string kRdfType = rdf::iri(rdf::ns::rdf, "type");
const std::string kXsdString = rdf::iri(rdf::ns::xsd, "string");
const std::string kXsdDecimal = rdf::iri(rdf::ns::xsd, "decimal");
const std::string kXsdDateTime = rdf::iri(rdf::ns::xsd, "dateTime");

std::string ssn(std::string_view local) { return rdf::iri(rdf::ns::ssn, local); }

[[noreturn]] void parse_error(const std::string& why) {
    throw Error(ErrorCode::ParseError, why);
}

[[noreturn]] void bad_jsonld(const std::string& why) {
    throw Error(ErrorCode::InvalidJsonLd, why);
}

std::optional<double> parse_decimal(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    if (text.empty()) return std::nullopt;
    // from_chars accepts "inf"/"nan"; restrict to plain decimal syntax.
    if (text.find_first_not_of("0123456789+-.eE") != std::string_view::npos) return std::nullopt;
    if (text.front() == '+') text.remove_prefix(1);
    double v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

using RawFields = PayloadFields;

RawFields fields_from_json(std::string_view payload) {
    json doc;
    try {
        doc = json::parse(payload);
    } catch (const json::parse_error& e) {
        parse_error(std::string("invalid JSON payload: ") + e.what());
    }
    if (!doc.is_object()) parse_error("JSON payload is not an object");

    RawFields f;
    auto text_field = [&](const char* key) -> std::optional<std::string> {
        const auto it = doc.find(key);
        if (it == doc.end() || it->is_null()) return std::nullopt;
        if (!it->is_string()) parse_error(std::string("field '") + key + "' must be a string");
        return it->get<std::string>();
    };
    f.sensor = text_field("sensor");
    f.property = text_field("property");
    f.unit = text_field("unit");
    f.time = text_field("time");

    const auto v = doc.find("value");
    if (v == doc.end()) parse_error("missing 'value'");
    if (v->is_number()) {
        f.value = v->get<double>();
        if (!std::isfinite(f.value)) parse_error("non-finite value");
    } else if (v->is_string()) {
        const auto parsed = parse_decimal(v->get_ref<const std::string&>());
        if (!parsed) parse_error("non-numeric value '" + v->get<std::string>() + "'");
        f.value = *parsed;
    } else {
        parse_error("non-numeric value");
    }
    return f;
}

RawFields fields_from_xml(std::string_view payload) {
    namespace pt = boost::property_tree;
    pt::ptree doc;
    try {
        std::istringstream in{std::string(payload)};
        pt::read_xml(in, doc, pt::xml_parser::no_comments | pt::xml_parser::trim_whitespace);
    } catch (const pt::xml_parser_error& e) {
        parse_error(std::string("invalid XML payload: ") + e.what());
    }
    if (doc.size() != 1 || doc.begin()->first != "reading")
        parse_error("XML payload must have a single <reading> root element");
    const auto& root = doc.begin()->second;

    // Attributes take precedence over child elements.
    auto text_field = [&](const std::string& key) -> std::optional<std::string> {
        if (auto a = root.get_optional<std::string>("<xmlattr>." + key)) return *a;
        if (auto c = root.get_child_optional(key)) return c->data();
        return std::nullopt;
    };

    RawFields f;
    f.sensor = text_field("sensor");
    f.property = text_field("property");
    f.unit = text_field("unit");
    f.time = text_field("time");
    const auto value_text = text_field("value");
    if (!value_text) parse_error("missing 'value'");
    const auto parsed = parse_decimal(*value_text);
    if (!parsed) parse_error("non-numeric value '" + *value_text + "'");
    f.value = *parsed;
    return f;
}

}  // namespace

SensorRegistry::SensorRegistry(std::vector<SensorRegistryEntry> entries) {
    for (auto& e : entries) add(std::move(e));
}

void SensorRegistry::add(SensorRegistryEntry entry) {
    auto bad = [&](const std::string& why) {
        throw Error(ErrorCode::InvalidConfig, "sensor '" + entry.sensor_id + "': " + why);
    };
    if (entry.sensor_id.empty()) bad("empty sensor id");
    if (entry.observed_property.empty()) bad("empty observed property");
    for (const auto* iri : {&entry.sensor_iri, &entry.property_iri, &entry.feature_of_interest_iri})
        if (!is_absolute_iri(*iri)) bad("IRI '" + *iri + "' is not absolute");
    if (entries_.contains(entry.sensor_id)) bad("duplicate sensor id");
    auto id = entry.sensor_id;
    entries_.emplace(std::move(id), std::move(entry));
}

const SensorRegistryEntry* SensorRegistry::find(std::string_view sensor_id) const {
    const auto it = entries_.find(sensor_id);
    return it == entries_.end() ? nullptr : &it->second;
}

std::optional<std::string> DomainOntologyMap::property_iri(std::string_view name) const {
    const auto it = properties.find(name);
    if (it == properties.end()) return std::nullopt;
    return it->second;
}

std::optional<std::string> DomainOntologyMap::unit_iri(std::string_view code) const {
    const auto it = units.find(code);
    if (it == units.end()) return std::nullopt;
    return it->second;
}

void DomainOntologyMap::complete_from(const SensorRegistry& registry) {
    for (const auto& [id, entry] : registry.entries()) {
        const auto [it, inserted] = properties.emplace(entry.observed_property, entry.property_iri);
        if (!inserted && it->second != entry.property_iri)
            throw Error(ErrorCode::InvalidConfig, "sensor '" + id + "' maps property '" + entry.observed_property +
                                                      "' to <" + entry.property_iri + "> but the ontology map says <" +
                                                      it->second + ">");
    }
    for (const auto& [name, iri] : properties)
        if (!is_absolute_iri(iri)) throw Error(ErrorCode::InvalidConfig, "property IRI '" + iri + "' is not absolute");
    for (const auto& [code, iri] : units)
        if (!is_absolute_iri(iri)) throw Error(ErrorCode::InvalidConfig, "unit IRI '" + iri + "' is not absolute");
}

std::optional<std::string> sensor_segment(const Topic& topic) {
    const auto& s = topic.segments();
    for (std::size_t i = 0; i + 1 < s.size(); ++i)
        if (s[i] == "sensors") return s[i + 1];
    if (s.size() >= 2) return s[1];
    return std::nullopt;
}

PayloadFormat sniff_format(std::string_view payload) noexcept {
    for (const char c : payload) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        return c == '<' ? PayloadFormat::xml : PayloadFormat::json;
    }
    return PayloadFormat::json;
}

PayloadFields read_payload_fields(std::string_view payload, PayloadFormat format) {
    if (payload.empty()) parse_error("empty payload");
    return format == PayloadFormat::json ? fields_from_json(payload) : fields_from_xml(payload);
}

SensorReading parse_reading(std::string_view payload, PayloadFormat format, const Topic& topic,
                            const SensorRegistry& registry, Instant arrival) {
    const auto fields = read_payload_fields(payload, format);

    SensorReading r;
    if (fields.sensor) {
        r.sensor_id = *fields.sensor;
    } else if (auto seg = sensor_segment(topic)) {
        r.sensor_id = *seg;
    }
    if (r.sensor_id.empty()) parse_error("no sensor id in payload or topic '" + topic.str() + "'");
    const auto* entry = registry.find(r.sensor_id);
    if (!entry) parse_error("unknown sensor '" + r.sensor_id + "' has no registry entry");

    r.observed_property = fields.property.value_or(entry->observed_property);
    if (r.observed_property.empty()) parse_error("empty observed property");
    r.unit = fields.unit.value_or(entry->unit_code);
    r.value = fields.value;
    r.source_format = format;
    if (fields.time) {
        r.timestamp = parse_rfc3339(*fields.time);
    } else {
        r.timestamp = arrival;
        r.time_from_gateway = true;
    }
    return r;
}

std::string format_decimal(double value) {
    if (value == 0) return "0";
    char buf[512];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed);
    if (ec != std::errc{}) throw Error(ErrorCode::InvalidGraph, "value out of range for xsd:decimal");
    return {buf, ptr};
}

rdf::Graph annotate(const SensorReading& reading, const SensorRegistryEntry& entry, const DomainOntologyMap& dom) {
    if (entry.sensor_id != reading.sensor_id)
        throw Error(ErrorCode::UnknownSensor, "registry entry '" + entry.sensor_id + "' does not describe sensor '" +
                                                  reading.sensor_id + "'");
    const auto property = dom.property_iri(reading.observed_property);
    if (!property)
        throw Error(ErrorCode::UnknownProperty, "no IRI for observed property '" + reading.observed_property + "'");

    const auto obs = Term::blank("obs");
    const auto out = Term::blank("out");
    const auto val = Term::blank("val");
    const auto type = Term::named(kRdfType);

    rdf::Graph g;
    g.add(obs, type, Term::named(ssn("Observation")));
    g.add(obs, Term::named(ssn("observedBy")), Term::named(entry.sensor_iri));
    g.add(obs, Term::named(ssn("observedProperty")), Term::named(*property));
    g.add(obs, Term::named(ssn("featureOfInterest")), Term::named(entry.feature_of_interest_iri));
    g.add(obs, Term::named(ssn("observationResult")), out);
    g.add(out, type, Term::named(ssn("SensorOutput")));
    g.add(out, Term::named(ssn("hasValue")), val);
    g.add(val, type, Term::named(ssn("ObservationValue")));
    g.add(val, Term::named(rdf::iri(rdf::ns::dul, "hasDataValue")),
          Term::literal(format_decimal(reading.value), kXsdDecimal));
    g.add(obs, Term::named(ssn("observationResultTime")),
          Term::literal(format_rfc3339(reading.timestamp), kXsdDateTime));
    if (const auto unit = dom.unit_iri(reading.unit)) {
        g.add(val, Term::named(rdf::iri(rdf::ns::qudt, "unit")), Term::named(*unit));
    } else {
        g.add(val, Term::named(rdf::iri(rdf::ns::sgs, "unitCode")), Term::literal(reading.unit, kXsdString));
    }
    return g;
}

rdf::Graph annotate(const SensorReading& reading, const SensorRegistry& registry, const DomainOntologyMap& dom) {
    const auto* entry = registry.find(reading.sensor_id);
    if (!entry) throw Error(ErrorCode::UnknownSensor, "sensor '" + reading.sensor_id + "' is not registered");
    return annotate(reading, *entry, dom);
}

// ---------------------------------------------------------------------------
// Shape validation

namespace {

class ShapeWalker {
public:
    explicit ShapeWalker(const rdf::Graph& g) : g_(g) {}

    std::vector<const rdf::Triple*> find(const Term& s, const std::string& p) const {
        std::vector<const rdf::Triple*> out;
        for (const auto& t : g_)
            if (t.subject == s && t.predicate.kind == Term::Kind::iri && t.predicate.value == p) out.push_back(&t);
        return out;
    }

    // Marks and returns the first triple (s, p, o) whose object passes `accept`.
    template <typename Pred>
    const rdf::Triple* take(const Term& s, const std::string& p, Pred accept) {
        for (const auto* t : find(s, p)) {
            if (accept(t->object)) {
                used_.insert(t);
                return t;
            }
        }
        return nullptr;
    }

    const rdf::Triple* take_type(const Term& s, const std::string& type_iri) {
        return take(s, kRdfType, [&](const Term& o) { return o.kind == Term::Kind::iri && o.value == type_iri; });
    }

    [[nodiscard]] std::size_t used() const { return used_.size(); }

private:
    const rdf::Graph& g_;
    std::set<const rdf::Triple*> used_;
};

bool is_iri(const Term& t) { return t.kind == Term::Kind::iri; }

}  // namespace

ShapeReport check_shape(const rdf::Graph& g) {
    ShapeReport report;
    ShapeWalker walk(g);

    std::vector<Term> observations;
    for (const auto& t : g)
        if (t.predicate.value == kRdfType && t.object.kind == Term::Kind::iri && t.object.value == ssn("Observation"))
            observations.push_back(t.subject);
    if (observations.size() != 1) {
        report.missing.push_back("exactly one ssn:Observation node (found " + std::to_string(observations.size()) +
                                 ")");
        report.extra = g.size();
        return report;
    }
    const Term obs = observations.front();
    walk.take_type(obs, ssn("Observation"));

    auto require = [&](const rdf::Triple* t, const char* name) {
        if (!t) report.missing.emplace_back(name);
        return t;
    };

    require(walk.take(obs, ssn("observedBy"), is_iri), "_:obs ssn:observedBy <sensor>");
    require(walk.take(obs, ssn("observedProperty"), is_iri), "_:obs ssn:observedProperty <property>");
    require(walk.take(obs, ssn("featureOfInterest"), is_iri), "_:obs ssn:featureOfInterest <feature>");
    require(walk.take(obs, ssn("observationResultTime"),
                      [](const Term& o) {
                          if (o.kind != Term::Kind::literal || o.datatype != kXsdDateTime) return false;
                          try {
                              (void)parse_rfc3339(o.value);
                              return true;
                          } catch (const Error&) {
                              return false;
                          }
                      }),
            "_:obs ssn:observationResultTime \"...\"^^xsd:dateTime");

    const auto* result = require(walk.take(obs, ssn("observationResult"), [](const Term& o) { return o.is_resource(); }),
                                 "_:obs ssn:observationResult _:out");
    if (!result) {
        for (const char* name : {"_:out rdf:type ssn:SensorOutput", "_:out ssn:hasValue _:val",
                                 "_:val rdf:type ssn:ObservationValue", "_:val dul:hasDataValue \"...\"^^xsd:decimal"})
            report.missing.emplace_back(name);
        report.extra = g.size() - walk.used();
        return report;
    }
    const Term out = result->object;
    require(walk.take_type(out, ssn("SensorOutput")), "_:out rdf:type ssn:SensorOutput");
    const auto* has_value =
        require(walk.take(out, ssn("hasValue"), [](const Term& o) { return o.is_resource(); }), "_:out ssn:hasValue _:val");
    if (!has_value) {
        for (const char* name : {"_:val rdf:type ssn:ObservationValue", "_:val dul:hasDataValue \"...\"^^xsd:decimal"})
            report.missing.emplace_back(name);
        report.extra = g.size() - walk.used();
        return report;
    }
    const Term val = has_value->object;
    require(walk.take_type(val, ssn("ObservationValue")), "_:val rdf:type ssn:ObservationValue");
    require(walk.take(val, rdf::iri(rdf::ns::dul, "hasDataValue"),
                      [](const Term& o) {
                          return o.kind == Term::Kind::literal && o.datatype == kXsdDecimal &&
                                 parse_decimal(o.value).has_value() &&
                                 o.value.find_first_of("eE") == std::string::npos;
                      }),
            "_:val dul:hasDataValue \"...\"^^xsd:decimal");

    const auto* unit_iri = walk.take(val, rdf::iri(rdf::ns::qudt, "unit"), is_iri);
    const auto* unit_code = unit_iri ? nullptr
                                     : walk.take(val, rdf::iri(rdf::ns::sgs, "unitCode"),
                                                 [](const Term& o) { return o.kind == Term::Kind::literal; });
    report.has_unit = unit_iri || unit_code;
    report.extra = g.size() - walk.used();
    return report;
}

// ---------------------------------------------------------------------------
// JSON-LD

const std::map<std::string, std::string, std::less<>>& context_prefixes() {
    static const std::map<std::string, std::string, std::less<>> prefixes{
        {"dul", std::string(rdf::ns::dul)}, {"qudt", std::string(rdf::ns::qudt)}, {"rdf", std::string(rdf::ns::rdf)},
        {"sgs", std::string(rdf::ns::sgs)}, {"ssn", std::string(rdf::ns::ssn)},   {"xsd", std::string(rdf::ns::xsd)},
    };
    return prefixes;
}

namespace {

json context_json() {
    json ctx = json::object();
    for (const auto& [prefix, ns] : context_prefixes()) ctx[prefix] = ns;
    return ctx;
}

std::string dump(const json& j) {
    return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string compact(const std::string& iri) {
    const std::pair<const std::string, std::string>* best = nullptr;
    for (const auto& entry : context_prefixes()) {
        const auto& ns = entry.second;
        if (iri.size() > ns.size() && iri.compare(0, ns.size(), ns) == 0 &&
            (!best || ns.size() > best->second.size()))
            best = &entry;
    }
    if (!best) return iri;
    return best->first + ":" + iri.substr(best->second.size());
}

std::string node_id(const Term& t) {
    return t.kind == Term::Kind::blank ? "_:" + t.value : compact(t.value);
}

json object_json(const Term& t) {
    if (t.is_resource()) return json{{"@id", node_id(t)}};
    if (t.datatype == kXsdString) return json{{"@value", t.value}};
    return json{{"@type", compact(t.datatype)}, {"@value", t.value}};
}

void append(json& slot, json value) {
    if (slot.is_null()) {
        slot = std::move(value);
    } else if (slot.is_array()) {
        slot.push_back(std::move(value));
    } else {
        slot = json::array({std::move(slot), std::move(value)});
    }
}

class Expander {
public:
    explicit Expander(const json& ctx) {
        if (!ctx.is_object()) bad_jsonld("@context must be an object of prefix mappings");
        for (const auto& [prefix, ns] : ctx.items()) {
            if (!ns.is_string()) bad_jsonld("@context entry '" + prefix + "' is not a string");
            prefixes_[prefix] = ns.get<std::string>();
        }
    }

    // Keys, @type values and datatypes.
    std::string vocab(const std::string& term) const {
        const auto colon = term.find(':');
        if (colon == std::string::npos) bad_jsonld("term '" + term + "' is not a compact or absolute IRI");
        const auto prefix = term.substr(0, colon);
        if (prefix == "_") bad_jsonld("blank node '" + term + "' used as a vocabulary term");
        if (const auto it = prefixes_.find(prefix); it != prefixes_.end()) return it->second + term.substr(colon + 1);
        if (term.compare(colon + 1, 2, "//") == 0) return term;
        bad_jsonld("unknown prefix '" + prefix + "' in '" + term + "'");
    }

    // @id values.
    Term node(const std::string& id) const {
        if (id.starts_with("_:")) {
            if (id.size() == 2) bad_jsonld("empty blank node label");
            return Term::blank(id.substr(2));
        }
        const auto colon = id.find(':');
        if (colon != std::string::npos) {
            if (const auto it = prefixes_.find(id.substr(0, colon)); it != prefixes_.end())
                return Term::named(it->second + id.substr(colon + 1));
        }
        if (!is_absolute_iri(id)) bad_jsonld("'" + id + "' is neither a blank node nor an absolute IRI");
        return Term::named(id);
    }

private:
    std::map<std::string, std::string> prefixes_;
};

Term value_term(const json& v, const Expander& ex) {
    if (v.is_string()) return Term::literal(v.get<std::string>(), kXsdString);
    if (!v.is_object()) bad_jsonld("unsupported value " + dump(v));
    if (const auto id = v.find("@id"); id != v.end()) {
        if (v.size() != 1 || !id->is_string()) bad_jsonld("node reference must be {\"@id\": string}");
        return ex.node(id->get<std::string>());
    }
    const auto lex = v.find("@value");
    if (lex == v.end() || !lex->is_string()) bad_jsonld("value object needs a string @value: " + dump(v));
    std::string datatype = kXsdString;
    if (const auto type = v.find("@type"); type != v.end()) {
        if (!type->is_string()) bad_jsonld("@type of a value object must be a string");
        datatype = ex.vocab(type->get<std::string>());
    }
    for (const auto& [key, _] : v.items())
        if (key != "@value" && key != "@type") bad_jsonld("unsupported key '" + key + "' in value object");
    return Term::literal(lex->get<std::string>(), std::move(datatype));
}

void read_node(const json& node, const Expander& ex, rdf::Graph& g) {
    if (!node.is_object()) bad_jsonld("@graph entries must be objects");
    const auto id = node.find("@id");
    if (id == node.end() || !id->is_string()) bad_jsonld("node without string @id");
    const Term subject = ex.node(id->get<std::string>());

    for (const auto& [key, value] : node.items()) {
        if (key == "@id") continue;
        if (key == "@type") {
            const auto add_type = [&](const json& t) {
                if (!t.is_string()) bad_jsonld("@type entries must be strings");
                g.add(subject, Term::named(kRdfType), Term::named(ex.vocab(t.get<std::string>())));
            };
            if (value.is_array()) {
                for (const auto& t : value) add_type(t);
            } else {
                add_type(value);
            }
            continue;
        }
        if (key.starts_with("@")) bad_jsonld("unsupported keyword '" + key + "'");
        const Term predicate = Term::named(ex.vocab(key));
        if (value.is_array()) {
            for (const auto& v : value) g.add(subject, predicate, value_term(v, ex));
        } else {
            g.add(subject, predicate, value_term(value, ex));
        }
    }
}

}  // namespace

std::string context_document() {
    return dump(json{{"@context", context_json()}});
}

std::string serialize_jsonld(const rdf::Graph& g) {
    std::map<std::string, json> nodes;
    for (const auto& t : g) {
        if (t.subject.kind == Term::Kind::literal || t.predicate.kind != Term::Kind::iri)
            throw Error(ErrorCode::InvalidGraph, "ill-formed triple " + t.str());
        const auto id = node_id(t.subject);
        auto& node = nodes[id];
        if (node.is_null()) node = json{{"@id", id}};
        if (t.predicate.value == kRdfType && t.object.kind == Term::Kind::iri) {
            append(node["@type"], compact(t.object.value));
        } else {
            append(node[compact(t.predicate.value)], object_json(t.object));
        }
    }
    json graph = json::array();
    for (auto& [_, node] : nodes) graph.push_back(std::move(node));
    return dump(json{{"@context", context_json()}, {"@graph", std::move(graph)}});
}

rdf::Graph parse_jsonld(std::string_view document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        bad_jsonld(std::string("not well-formed JSON: ") + e.what());
    }
    if (!doc.is_object()) bad_jsonld("document is not a JSON object");
    const auto ctx = doc.find("@context");
    if (ctx == doc.end()) bad_jsonld("missing @context");
    const Expander ex(*ctx);

    rdf::Graph g;
    if (const auto graph = doc.find("@graph"); graph != doc.end()) {
        if (!graph->is_array()) bad_jsonld("@graph must be an array");
        for (const auto& node : *graph) read_node(node, ex, g);
    } else {
        json node = doc;
        node.erase("@context");
        read_node(node, ex, g);
    }
    return g;
}

std::string to_jsonld(const rdf::Graph& g) {
    const auto shape = check_shape(g);
    if (!shape.valid()) throw Error(ErrorCode::InvalidGraph, "observation graph lacks " + shape.missing.front());
    return serialize_jsonld(g);
}

rdf::Graph from_jsonld(std::string_view document) {
    auto g = parse_jsonld(document);
    const auto shape = check_shape(g);
    if (!shape.valid()) bad_jsonld("missing required triple: " + shape.missing.front());
    return g;
}

std::string sensor_description_jsonld(const SensorRegistryEntry& entry, const DomainOntologyMap& dom) {
    const auto sensor = Term::named(entry.sensor_iri);
    const auto property = Term::named(dom.property_iri(entry.observed_property).value_or(entry.property_iri));
    const auto feature = Term::named(entry.feature_of_interest_iri);
    const auto type = Term::named(kRdfType);
    auto sgs_term = [](std::string_view local) { return Term::named(rdf::iri(rdf::ns::sgs, local)); };

    rdf::Graph g;
    g.add(sensor, type, Term::named(ssn("Sensor")));
    g.add(sensor, Term::named(ssn("observes")), property);
    g.add(sensor, sgs_term("sensorId"), Term::literal(entry.sensor_id, kXsdString));
    g.add(sensor, sgs_term("visibility"),
          Term::literal(entry.visibility == Visibility::private_ ? "private" : "public", kXsdString));
    g.add(sensor, sgs_term("unitCode"), Term::literal(entry.unit_code, kXsdString));
    if (const auto unit = dom.unit_iri(entry.unit_code))
        g.add(sensor, Term::named(rdf::iri(rdf::ns::qudt, "unit")), Term::named(*unit));
    g.add(property, type, Term::named(ssn("Property")));
    g.add(property, Term::named(ssn("isPropertyOf")), feature);
    g.add(feature, type, Term::named(ssn("FeatureOfInterest")));
    return serialize_jsonld(g);
}

}  // namespace sgs::annotation
