#pragma once

// Schema layer: an upper-level class skeleton (continuants and occurrents),
// domain classes and properties declared in a line-based file, consistency
// checks over a graph, and the count-based ontology metrics.
//
//   class <Name> sub <Parent>
//   objprop <name> [domain <Class>] [range <Class>]
//   dataprop <name> [domain <Class>]
//   disjoint <A> <B> ...
//   annotation <key> <free text>
//   # comment

#include <liverkg/error.hpp>
#include <liverkg/graph.hpp>
#include <liverkg/vocabulary.hpp>

#include <nlohmann/json.hpp>

#include <array>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace liverkg::ontology {

inline constexpr std::array<std::pair<std::string_view, std::string_view>, 9> skeleton = {{
    {"Continuant", ""},
    {"Occurrent", ""},
    {"IndependentContinuant", "Continuant"},
    {"GenericallyDependentContinuant", "Continuant"},
    {"SpecificallyDependentContinuant", "Continuant"},
    {"Process", "Occurrent"},
    {"ProcessBoundary", "Occurrent"},
    {"SpatiotemporalRegion", "Occurrent"},
    {"TemporalRegion", "Occurrent"},
}};

struct ObjectProperty {
    std::string name;
    std::optional<std::string> domain;
    std::optional<std::string> range;
};

struct DataProperty {
    std::string name;
    std::optional<std::string> domain;
};

struct Schema {
    std::vector<std::string> classes;               // declaration order, skeleton first
    std::map<std::string, std::string> parent;      // roots absent
    std::vector<ObjectProperty> object_properties;
    std::vector<DataProperty> data_properties;
    std::vector<std::vector<std::string>> disjoint_sets;
    std::map<std::string, std::string> annotations;

    bool has_class(const std::string& c) const { return std::find(classes.begin(), classes.end(), c) != classes.end(); }

    // Reflexive, transitive.
    bool is_subclass_of(std::string c, const std::string& ancestor) const {
        while (true) {
            if (c == ancestor) return true;
            auto it = parent.find(c);
            if (it == parent.end()) return false;
            c = it->second;
        }
    }

    std::size_t subclass_edges() const { return parent.size(); }
};

namespace detail {

inline std::vector<std::string> words(const std::string& line) {
    std::istringstream in(line);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

}  // namespace detail

inline Schema skeleton_schema() {
    Schema s;
    for (auto [c, p] : skeleton) {
        s.classes.emplace_back(c);
        if (!p.empty()) s.parent[std::string(c)] = std::string(p);
    }
    s.disjoint_sets = {{"Continuant", "Occurrent"},
                       {"IndependentContinuant", "GenericallyDependentContinuant", "SpecificallyDependentContinuant"}};
    return s;
}

inline Schema load_schema(std::string_view text) {
    Schema s = skeleton_schema();
    std::set<std::string> builtin(s.classes.begin(), s.classes.end());
    std::set<std::string> props;
    std::vector<std::pair<std::string, std::size_t>> class_refs;  // checked once every class is known
    std::istringstream in{std::string(text)};
    std::size_t lineno = 0;
    auto fail = [&](const std::string& msg) -> void { throw ParseError(msg, lineno, 1); };
    for (std::string line; std::getline(in, line);) {
        ++lineno;
        auto hash = line.find('#');
        auto w = detail::words(hash == std::string::npos ? line : line.substr(0, hash));
        if (w.empty()) continue;
        const auto& kw = w[0];
        if (kw == "class") {
            if (w.size() != 4 || w[2] != "sub") fail("expected: class <Name> sub <Parent>");
            if (builtin.count(w[1])) fail("cannot redeclare built-in class " + w[1]);
            if (s.has_class(w[1])) fail("duplicate class " + w[1]);
            s.classes.push_back(w[1]);
            s.parent[w[1]] = w[3];
            class_refs.push_back({w[3], lineno});
        } else if (kw == "objprop" || kw == "dataprop") {
            if (w.size() < 2) fail(kw + " needs a name");
            if (!props.insert(w[1]).second) fail("duplicate property " + w[1]);
            std::optional<std::string> domain, range;
            for (std::size_t i = 2; i < w.size(); i += 2) {
                if (i + 1 >= w.size()) fail("missing class after '" + w[i] + "'");
                if (w[i] == "domain" && !domain) domain = w[i + 1];
                else if (w[i] == "range" && kw == "objprop" && !range) range = w[i + 1];
                else fail("unexpected '" + w[i] + "'");
                class_refs.push_back({w[i + 1], lineno});
            }
            if (kw == "objprop") s.object_properties.push_back({w[1], domain, range});
            else s.data_properties.push_back({w[1], domain});
        } else if (kw == "disjoint") {
            if (w.size() < 3) fail("disjoint needs at least two classes");
            std::vector<std::string> set(w.begin() + 1, w.end());
            for (const auto& c : set) class_refs.push_back({c, lineno});
            s.disjoint_sets.push_back(std::move(set));
        } else if (kw == "annotation") {
            if (w.size() < 2) fail("annotation needs a key");
            auto key_at = line.find(w[1]);
            auto rest = line.substr(key_at + w[1].size());
            auto first = rest.find_first_not_of(" \t");
            s.annotations[w[1]] = first == std::string::npos ? "" : rest.substr(first, rest.find_last_not_of(" \t\r") - first + 1);
        } else {
            fail("unknown declaration '" + kw + "'");
        }
    }
    for (const auto& [c, at] : class_refs)
        if (!s.has_class(c)) throw ParseError("unknown class " + c, at, 1);
    // Every chain must reach a root without revisiting a class.
    for (const auto& c : s.classes) {
        std::set<std::string> seen;
        for (std::string cur = c; s.parent.count(cur); cur = s.parent.at(cur))
            if (!seen.insert(cur).second) throw DataError("subclass cycle through " + cur);
    }
    return s;
}

// ---- consistency ----

enum class ViolationKind { Disjointness, Domain, Range };

struct Violation {
    ViolationKind kind;
    rdf::Iri subject;
    std::string detail;
    friend bool operator==(const Violation& a, const Violation& b) {
        return a.kind == b.kind && a.subject == b.subject && a.detail == b.detail;
    }
    friend bool operator<(const Violation& a, const Violation& b) {
        return std::tie(a.kind, a.subject, a.detail) < std::tie(b.kind, b.subject, b.detail);
    }
};

inline std::string_view kind_name(ViolationKind k) {
    switch (k) {
        case ViolationKind::Disjointness: return "disjointness";
        case ViolationKind::Domain: return "domain";
        case ViolationKind::Range: return "range";
    }
    return "domain";
}

namespace detail {

// The first disjoint set separating a and b, if any.
inline const std::vector<std::string>* separating_set(const Schema& s, const std::string& a, const std::string& b) {
    for (const auto& set : s.disjoint_sets) {
        std::optional<std::size_t> ia, ib;
        for (std::size_t i = 0; i < set.size(); ++i) {
            if (!ia && s.is_subclass_of(a, set[i])) ia = i;
            if (!ib && s.is_subclass_of(b, set[i])) ib = i;
        }
        if (ia && ib && *ia != *ib) return &set;
    }
    return nullptr;
}

inline std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& x : v) out += (out.empty() ? "" : ", ") + x;
    return out;
}

}  // namespace detail

// Asserted schema classes per individual.
inline std::map<rdf::Iri, std::set<std::string>> asserted_types(const Schema& s, const rdf::Graph& g,
                                                                 const Vocabulary& vocab) {
    std::map<rdf::Iri, std::string> by_iri;
    for (const auto& c : s.classes) by_iri.emplace(vocab.resolve(c), c);
    std::map<rdf::Iri, std::set<std::string>> out;
    for (const auto& t : g.match(std::nullopt, rdf::Iri(std::string(rdf::rdf_ns::type)), std::nullopt)) {
        auto* o = std::get_if<rdf::Iri>(&t.object);
        if (!o) continue;
        if (auto it = by_iri.find(*o); it != by_iri.end()) out[t.subject].insert(it->second);
    }
    return out;
}

// Reports individuals typed into classes that a disjoint set separates, and
// property assertions whose subject (or object, for ranges) is typed into a
// class disjoint with the declared domain (range). Untyped individuals never
// violate a domain: declarations constrain, they do not require typing.
inline std::vector<Violation> check_consistency(const Schema& s, const rdf::Graph& g,
                                                const Vocabulary& vocab = Vocabulary::clinical()) {
    auto types = asserted_types(s, g, vocab);
    std::set<Violation> out;
    for (const auto& [ind, cls] : types) {
        std::vector<std::string> v(cls.begin(), cls.end());
        for (std::size_t i = 0; i < v.size(); ++i)
            for (std::size_t j = i + 1; j < v.size(); ++j)
                if (auto* set = detail::separating_set(s, v[i], v[j]))
                    out.insert({ViolationKind::Disjointness, ind,
                                v[i] + " and " + v[j] + " are disjoint (" + detail::join(*set) + ")"});
    }
    auto check = [&](ViolationKind kind, const std::string& prop, const std::string& expected, const rdf::Term& who) {
        auto* iri = std::get_if<rdf::Iri>(&who);
        if (!iri) return;
        auto it = types.find(*iri);
        if (it == types.end()) return;
        for (const auto& c : it->second)
            if (detail::separating_set(s, c, expected))
                out.insert({kind, *iri, prop + " expects " + expected + " but subject is " + c});
    };
    auto domain_check = [&](const std::string& prop, const std::optional<std::string>& domain,
                            const std::optional<std::string>& range) {
        if (!domain && !range) return;
        for (const auto& t : g.match(std::nullopt, vocab.resolve(prop), std::nullopt)) {
            if (domain) check(ViolationKind::Domain, prop, *domain, t.subject);
            if (range) check(ViolationKind::Range, prop, *range, t.object);
        }
    };
    for (const auto& p : s.object_properties) domain_check(p.name, p.domain, p.range);
    for (const auto& p : s.data_properties) domain_check(p.name, p.domain, std::nullopt);
    return {out.begin(), out.end()};
}

// ---- metrics ----

struct Counts {
    std::size_t classes = 0;
    std::size_t properties = 0;    // object + data
    std::size_t attributes = 0;    // data properties
    std::size_t subclass_of = 0;
    std::size_t individuals = 0;
    std::size_t classes_with_instance = 0;
};

struct Metrics {
    double attribute_richness = 0;
    double class_richness = 0;
    double average_population = 0;
    double relationship_richness = 0;
    Counts counts;
};

inline Metrics metrics_from_counts(const Counts& c) {
    if (c.classes == 0) throw PreconditionError("ontology metrics need at least one class");
    if (c.classes_with_instance > c.classes) throw DataError("more instantiated classes than classes");
    Metrics m;
    m.counts = c;
    auto n = static_cast<double>(c.classes);
    m.attribute_richness = static_cast<double>(c.attributes) / n;
    m.class_richness = static_cast<double>(c.classes_with_instance) / n;
    m.average_population = static_cast<double>(c.individuals) / n;
    auto rel = c.subclass_of + c.properties;
    m.relationship_richness = rel == 0 ? 0.0 : static_cast<double>(c.properties) / static_cast<double>(rel);
    return m;
}

// Individuals are subjects with at least one rdf:type; a class has an
// instance when some individual is directly typed with it.
inline Counts count(const Schema& s, const rdf::Graph& g, const Vocabulary& vocab = Vocabulary::clinical()) {
    Counts c;
    c.classes = s.classes.size();
    c.properties = s.object_properties.size() + s.data_properties.size();
    c.attributes = s.data_properties.size();
    c.subclass_of = s.subclass_edges();
    std::set<rdf::Iri> individuals;
    for (const auto& t : g.match(std::nullopt, rdf::Iri(std::string(rdf::rdf_ns::type)), std::nullopt))
        individuals.insert(t.subject);
    c.individuals = individuals.size();
    std::set<std::string> used;
    for (const auto& [ind, cls] : asserted_types(s, g, vocab)) used.insert(cls.begin(), cls.end());
    c.classes_with_instance = used.size();
    return c;
}

inline Metrics compute_metrics(const Schema& s, const rdf::Graph& g, const Vocabulary& vocab = Vocabulary::clinical()) {
    return metrics_from_counts(count(s, g, vocab));
}

inline nlohmann::json to_json(const Metrics& m) {
    return {{"Attribute Richness", m.attribute_richness},
            {"Class Richness", m.class_richness},
            {"Average Population", m.average_population},
            {"Relationship Richness", m.relationship_richness},
            {"counts",
             {{"Class", m.counts.classes},
              {"Prop", m.counts.properties},
              {"Attribute", m.counts.attributes},
              {"SubClassOf", m.counts.subclass_of},
              {"Individual", m.counts.individuals},
              {"Class with instance", m.counts.classes_with_instance}}}};
}

inline nlohmann::json to_json(const Violation& v) {
    return {{"kind", kind_name(v.kind)}, {"subject", v.subject.str()}, {"detail", v.detail}};
}

}  // namespace liverkg::ontology
