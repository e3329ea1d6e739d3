#pragma once

// Minimal RDF term/triple model used for observation graphs.

#include <compare>
#include <set>
#include <string>
#include <string_view>

namespace sgs::rdf {

namespace ns {
inline constexpr std::string_view rdf = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
inline constexpr std::string_view xsd = "http://www.w3.org/2001/XMLSchema#";
inline constexpr std::string_view ssn = "http://purl.oclc.org/NET/ssnx/ssn#";
inline constexpr std::string_view dul = "http://www.loa-cnr.it/ontologies/DUL.owl#";
inline constexpr std::string_view qudt = "http://qudt.org/schema/qudt/";
inline constexpr std::string_view sgs = "https://w3id.org/sgs/ns#";
}  // namespace ns

std::string iri(std::string_view ns, std::string_view local);

struct Term {
    enum class Kind { iri, blank, literal };

    Kind kind = Kind::iri;
    /// IRI, blank-node label without "_:", or literal lexical form.
    std::string value;
    /// Datatype IRI, literals only.
    std::string datatype;

    static Term named(std::string iri) { return {Kind::iri, std::move(iri), {}}; }
    static Term blank(std::string label) { return {Kind::blank, std::move(label), {}}; }
    static Term literal(std::string lexical, std::string datatype_iri) {
        return {Kind::literal, std::move(lexical), std::move(datatype_iri)};
    }

    [[nodiscard]] bool is_resource() const noexcept { return kind != Kind::literal; }
    /// N-Triples-like rendering for diagnostics.
    [[nodiscard]] std::string str() const;

    friend auto operator<=>(const Term&, const Term&) = default;
    friend bool operator==(const Term&, const Term&) = default;
};

struct Triple {
    Term subject;
    Term predicate;
    Term object;

    [[nodiscard]] std::string str() const;

    friend auto operator<=>(const Triple&, const Triple&) = default;
    friend bool operator==(const Triple&, const Triple&) = default;
};

class Graph {
public:
    using const_iterator = std::set<Triple>::const_iterator;

    void add(Term s, Term p, Term o) { triples_.insert(Triple{std::move(s), std::move(p), std::move(o)}); }
    void add(Triple t) { triples_.insert(std::move(t)); }

    [[nodiscard]] std::size_t size() const noexcept { return triples_.size(); }
    [[nodiscard]] bool empty() const noexcept { return triples_.empty(); }
    [[nodiscard]] bool contains(const Triple& t) const { return triples_.contains(t); }
    [[nodiscard]] const_iterator begin() const { return triples_.begin(); }
    [[nodiscard]] const_iterator end() const { return triples_.end(); }
    [[nodiscard]] const std::set<Triple>& triples() const noexcept { return triples_; }

    friend bool operator==(const Graph&, const Graph&) = default;

private:
    std::set<Triple> triples_;
};

}  // namespace sgs::rdf
