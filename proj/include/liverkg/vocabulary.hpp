#pragma once

#include <liverkg/term.hpp>

#include <array>
#include <map>
#include <string>
#include <string_view>

namespace liverkg {

namespace ns {
inline constexpr std::string_view schema = "http://schema.org/";
inline constexpr std::string_view ontology = "http://www.semanticweb.org/liver-disease-ontology#";
inline constexpr std::string_view records = "http://example.org/hcv/";
}  // namespace ns

// The ten laboratory attributes, in dataset column order.
inline constexpr std::array<std::string_view, 10> lab_names = {"ALB", "ALP", "ALT", "AST", "BIL",
                                                              "CHE", "CHOL", "CREA", "GGT", "PROT"};

// Maps the bare names used in rules and schema files (Patient,
// hasValueAST, every4Weeks) onto IRIs. Names without an alias land in the
// ontology namespace.
class Vocabulary {
public:
    Vocabulary() = default;
    explicit Vocabulary(std::string base) : base_(std::move(base)) {}

    // Rule vocabulary bound to the ingested record layout: Patient is a
    // schema:MedicalRecord and hasValueX reads the schema:X attribute.
    static Vocabulary clinical() {
        Vocabulary v;
        std::string schema(ns::schema);
        v.alias("Patient", schema + "MedicalRecord");
        for (auto lab : lab_names) v.alias("hasValue" + std::string(lab), schema + std::string(lab));
        v.alias("hasAge", schema + "Age");
        v.alias("hasSex", schema + "Sex");
        v.alias("hasCategory", schema + "Category");
        v.alias("hasSNo", schema + "SNo");
        return v;
    }

    void alias(const std::string& name, const std::string& iri) {
        rdf::Iri resolved(iri);
        forward_[name] = resolved;
        reverse_[resolved.str()] = name;
    }

    rdf::Iri resolve(const std::string& name) const {
        if (auto it = forward_.find(name); it != forward_.end()) return it->second;
        return rdf::Iri(base_ + name);
    }

    // Inverse of resolve where possible; otherwise the full IRI text.
    std::string local_name(const rdf::Iri& iri) const {
        if (auto it = reverse_.find(iri.str()); it != reverse_.end()) return it->second;
        const auto& s = iri.str();
        if (s.size() > base_.size() && s.compare(0, base_.size(), base_) == 0) return s.substr(base_.size());
        return s;
    }

    const std::string& base() const noexcept { return base_; }

private:
    std::string base_{ns::ontology};
    std::map<std::string, rdf::Iri> forward_;
    std::map<std::string, std::string> reverse_;
};

}  // namespace liverkg
