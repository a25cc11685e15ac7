#include <liverkg/ingest.hpp>
#include <liverkg/knowledge.hpp>
#include <liverkg/ontology.hpp>

#include "support/generators.hpp"
#include "support/hcv_fixture.hpp"

#include <gtest/gtest.h>

using namespace liverkg;
using namespace liverkg::ontology;

namespace {

const Vocabulary vocab = Vocabulary::clinical();

rdf::Triple typed(const std::string& ind, const std::string& cls) {
    return {rdf::Iri("http://example.org/ind/" + ind), rdf::Iri(std::string(rdf::rdf_ns::type)), vocab.resolve(cls)};
}

rdf::Iri ind(const std::string& name) { return rdf::Iri("http://example.org/ind/" + name); }

Schema liver() { return load_schema(knowledge::liver_schema); }

}  // namespace

TEST(Schema, EmptyIsSkeleton) {
    auto s = load_schema("");
    EXPECT_EQ(s.classes.size(), 9u);
    EXPECT_EQ(s.subclass_edges(), 7u);
    EXPECT_TRUE(s.is_subclass_of("TemporalRegion", "Occurrent"));
    EXPECT_FALSE(s.is_subclass_of("Process", "Continuant"));
    EXPECT_EQ(s.disjoint_sets.size(), 2u);
    auto comments = load_schema("# nothing\n\n   # still nothing\n");
    EXPECT_EQ(comments.classes.size(), 9u);
}

TEST(Schema, LiverClassesPlaced) {
    auto s = liver();
    EXPECT_EQ(s.classes.size(), 23u);
    EXPECT_EQ(s.parent.at("Symptoms"), "GenericallyDependentContinuant");
    EXPECT_EQ(s.parent.at("Patient"), "SpecificallyDependentContinuant");
    EXPECT_EQ(s.parent.at("Liver_Diseases"), "IndependentContinuant");
    EXPECT_EQ(s.parent.at("DiagnosticProcedure"), "Process");
    EXPECT_EQ(s.parent.at("MedicalObservation"), "SpatiotemporalRegion");
    for (const auto& c : s.classes)
        EXPECT_TRUE(s.is_subclass_of(c, "Continuant") != s.is_subclass_of(c, "Occurrent")) << c;
    ASSERT_EQ(s.object_properties.size(), 5u);
    EXPECT_EQ(s.object_properties[0].name, "has_Symptom");
    EXPECT_EQ(*s.object_properties[0].domain, "Patient");
    EXPECT_EQ(*s.object_properties[0].range, "Symptoms");
    EXPECT_EQ(s.data_properties.size(), 13u);
    EXPECT_EQ(s.annotations.at("label"), "Liver disease knowledge graph");
}

TEST(Schema, ForwardReferenceToParent) {
    auto s = load_schema("class B sub A\nclass A sub Process\n");
    EXPECT_TRUE(s.is_subclass_of("B", "Occurrent"));
}

TEST(Schema, Errors) {
    EXPECT_THROW(load_schema("class X sub X\n"), DataError);
    EXPECT_THROW(load_schema("class A sub B\nclass B sub A\n"), DataError);
    try {
        load_schema("class A sub Process\n\nclass B sub Nowhere\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    EXPECT_THROW(load_schema("class Process sub Occurrent\n"), ParseError);
    EXPECT_THROW(load_schema("class A sub Process\nclass A sub Process\n"), ParseError);
    EXPECT_THROW(load_schema("class A Process\n"), ParseError);
    EXPECT_THROW(load_schema("objprop p domain Nowhere\n"), ParseError);
    EXPECT_THROW(load_schema("dataprop p range Process\n"), ParseError);
    EXPECT_THROW(load_schema("objprop p domain\n"), ParseError);
    EXPECT_THROW(load_schema("objprop p\nobjprop p\n"), ParseError);
    EXPECT_THROW(load_schema("disjoint Process\n"), ParseError);
    EXPECT_THROW(load_schema("individual x\n"), ParseError);
}

TEST(Consistency, EmptyGraph) { EXPECT_TRUE(check_consistency(liver(), rdf::Graph{}).empty()); }

TEST(Consistency, ContinuantAndOccurrent) {
    rdf::Graph g;
    g.insert(typed("p1", "Patient"));
    g.insert(typed("p1", "DiagnosticProcedure"));
    auto v = check_consistency(liver(), g);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].kind, ViolationKind::Disjointness);
    EXPECT_EQ(v[0].subject, ind("p1"));
}

TEST(Consistency, DependentContinuantsDisjointByDefault) {
    rdf::Graph g;
    g.insert(typed("p1", "Patient"));
    g.insert(typed("p1", "Symptoms"));
    EXPECT_EQ(check_consistency(liver(), g).size(), 1u);
    // Siblings under one branch are not disjoint unless declared.
    rdf::Graph h;
    h.insert(typed("p2", "Patient"));
    h.insert(typed("p2", "Treatments"));
    EXPECT_TRUE(check_consistency(liver(), h).empty());
    auto declared = load_schema(std::string(knowledge::liver_schema) + "disjoint Patient Treatments\n");
    EXPECT_EQ(check_consistency(declared, h).size(), 1u);
}

TEST(Consistency, DomainViolation) {
    rdf::Graph g;
    g.insert(typed("s1", "Symptoms"));
    g.insert(ind("s1"), vocab.resolve("has_Symptom"), ind("fatigue"));
    auto v = check_consistency(liver(), g);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].kind, ViolationKind::Domain);
    EXPECT_NE(v[0].detail.find("has_Symptom"), std::string::npos);

    // A patient subject is fine; so is an untyped one.
    rdf::Graph ok;
    ok.insert(typed("p1", "Patient"));
    ok.insert(ind("p1"), vocab.resolve("has_Symptom"), ind("fatigue"));
    ok.insert(ind("u"), vocab.resolve("has_Symptom"), ind("fatigue"));
    EXPECT_TRUE(check_consistency(liver(), ok).empty());
}

TEST(Consistency, RangeViolation) {
    rdf::Graph g;
    g.insert(typed("p1", "Patient"));
    g.insert(typed("proc", "DiagnosticProcedure"));
    g.insert(ind("p1"), vocab.resolve("has_Symptom"), ind("proc"));
    auto v = check_consistency(liver(), g);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].kind, ViolationKind::Range);
}

TEST(Consistency, IngestedDatasetIsConsistent) {
    auto g = ingest::records_to_graph(ingest::load_encoded(testkit::synthetic_hcv_csv()));
    EXPECT_TRUE(check_consistency(liver(), g).empty());
}

TEST(Consistency, MonotoneInAssertions) {
    auto s = liver();
    testkit::Rng rng(8);
    static const char* classes[] = {"Patient", "Symptoms", "DiagnosticProcedure", "Treatments", "Hospitals", "Process"};
    static const char* props[] = {"has_Symptom", "is_SymptomOf", "hasValueALT", "hasHealthInsurance"};
    auto random_assertion = [&]() -> rdf::Triple {
        auto who = "i" + std::to_string(testkit::pick(rng, 6));
        if (testkit::pick(rng, 2)) return typed(who, classes[testkit::pick(rng, 6)]);
        return {ind(who), vocab.resolve(props[testkit::pick(rng, 4)]), ind("i" + std::to_string(testkit::pick(rng, 6)))};
    };
    for (int i = 0; i < 200; ++i) {
        rdf::Graph g1, g2;
        for (std::size_t k = testkit::pick(rng, 10); k > 0; --k) g1.insert(random_assertion());
        for (std::size_t k = testkit::pick(rng, 10); k > 0; --k) g2.insert(random_assertion());
        auto both = g1;
        for (const auto& t : g2.triples()) both.insert(t);
        auto small = check_consistency(s, g1);
        auto big = check_consistency(s, both);
        for (const auto& v : small) EXPECT_NE(std::find(big.begin(), big.end(), v), big.end());
    }
}

TEST(Metrics, ExactFormulas) {
    // 10 classes (9 skeleton + 1), 4 data properties, nothing else.
    auto s = load_schema(
        "class Patient sub SpecificallyDependentContinuant\n"
        "dataprop a\ndataprop b\ndataprop c\ndataprop d\n");
    auto m = compute_metrics(s, rdf::Graph{});
    EXPECT_EQ(m.counts.classes, 10u);
    EXPECT_DOUBLE_EQ(m.attribute_richness, 0.4);
    EXPECT_DOUBLE_EQ(m.class_richness, 0.0);
    EXPECT_DOUBLE_EQ(m.average_population, 0.0);
    // 4 properties, 8 subclass edges.
    EXPECT_DOUBLE_EQ(m.relationship_richness, 4.0 / 12.0);
}

TEST(Metrics, NoDataPropertiesMeansZeroAR) {
    EXPECT_DOUBLE_EQ(compute_metrics(load_schema("objprop p\n"), rdf::Graph{}).attribute_richness, 0.0);
}

TEST(Metrics, AllClassesInstantiated) {
    auto s = load_schema("");
    rdf::Graph g;
    for (std::size_t i = 0; i < s.classes.size(); ++i) g.insert(typed("x" + std::to_string(i), s.classes[i]));
    g.insert(typed("extra", "Process"));
    auto m = compute_metrics(s, g);
    EXPECT_DOUBLE_EQ(m.class_richness, 1.0);
    EXPECT_DOUBLE_EQ(m.average_population, 10.0 / 9.0);
}

TEST(Metrics, DirectTypingOnly) {
    auto s = load_schema("");
    rdf::Graph g;
    g.insert(typed("x", "Process"));
    EXPECT_EQ(compute_metrics(s, g).counts.classes_with_instance, 1u);  // Occurrent not counted
}

TEST(Metrics, PublishedCounts) {
    Counts c;
    c.classes = 125;
    c.properties = 27 + 28;
    c.attributes = 28;
    c.subclass_of = 12;
    c.individuals = 615;
    auto m = metrics_from_counts(c);
    EXPECT_DOUBLE_EQ(m.relationship_richness, 55.0 / 67.0);
    EXPECT_NEAR(m.relationship_richness, 0.8209, 5e-5);
    EXPECT_DOUBLE_EQ(m.average_population, 4.92);
    EXPECT_DOUBLE_EQ(m.attribute_richness, 28.0 / 125.0);
}

TEST(Metrics, Errors) {
    EXPECT_THROW(metrics_from_counts(Counts{}), PreconditionError);
    Counts c;
    c.classes = 1;
    c.classes_with_instance = 2;
    EXPECT_THROW(metrics_from_counts(c), DataError);
}

TEST(Metrics, RatioInvariance) {
    testkit::Rng rng(12);
    for (int i = 0; i < 300; ++i) {
        Counts c;
        c.classes = 1 + testkit::pick(rng, 200);
        c.attributes = testkit::pick(rng, 50);
        c.properties = c.attributes + testkit::pick(rng, 50);
        c.subclass_of = testkit::pick(rng, 100);
        c.individuals = testkit::pick(rng, 1000);
        c.classes_with_instance = testkit::pick(rng, c.classes + 1);
        auto d = c;
        for (auto* f : {&d.classes, &d.attributes, &d.properties, &d.subclass_of, &d.individuals, &d.classes_with_instance})
            *f *= 2;
        auto a = metrics_from_counts(c), b = metrics_from_counts(d);
        EXPECT_NEAR(a.attribute_richness, b.attribute_richness, 1e-12);
        EXPECT_NEAR(a.class_richness, b.class_richness, 1e-12);
        EXPECT_NEAR(a.average_population, b.average_population, 1e-12);
        EXPECT_NEAR(a.relationship_richness, b.relationship_richness, 1e-12);
        EXPECT_LE(a.class_richness, 1.0);
        EXPECT_GE(a.relationship_richness, 0.0);
        EXPECT_LE(a.relationship_richness, 1.0);
    }
}

TEST(Metrics, IngestedDataset) {
    auto g = ingest::records_to_graph(ingest::load_encoded(testkit::synthetic_hcv_csv()));
    auto m = compute_metrics(liver(), g);
    EXPECT_EQ(m.counts.individuals, 615u);
    EXPECT_EQ(m.counts.classes_with_instance, 1u);
    EXPECT_EQ(m.counts.classes, 23u);
    EXPECT_DOUBLE_EQ(m.average_population, 615.0 / 23.0);
    auto j = to_json(m);
    EXPECT_DOUBLE_EQ(j["Relationship Richness"].get<double>(), 18.0 / 39.0);
    EXPECT_EQ(j["counts"]["SubClassOf"], 21);
}
