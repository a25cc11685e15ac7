#include <liverkg/graph.hpp>
#include <liverkg/ntriples.hpp>

#include "support/generators.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace liverkg;
using namespace liverkg::rdf;

namespace {

const Iri kUid576{"http://example.org/hcv/uid/576"};
const Iri kCategory{"http://schema.org/Category"};

std::vector<Triple> scan(const Graph& g, const std::optional<Iri>& s, const std::optional<Iri>& p,
                         const std::optional<Term>& o) {
    std::vector<Triple> out;
    for (const auto& t : g.triples())
        if ((!s || t.subject == *s) && (!p || t.predicate == *p) && (!o || t.object == *o)) out.push_back(t);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

TEST(Graph, InsertIsIdempotent) {
    Graph g;
    Triple t{kUid576, kCategory, Literal::integer(3)};
    EXPECT_TRUE(g.insert(t));
    EXPECT_FALSE(g.insert(t));
    EXPECT_EQ(g.size(), 1u);
}

TEST(Graph, CategoryTripleIsFoundByMatch) {
    Graph g;
    g.insert(kUid576, kCategory, Literal("3", Datatype::Integer));
    EXPECT_EQ(g.size(), 1u);
    auto found = g.match(std::nullopt, kCategory);
    ASSERT_EQ(found.size(), 1u);
    EXPECT_EQ(found[0].subject, kUid576);
    EXPECT_EQ(numeric_value(found[0].object), 3.0);
}

TEST(Graph, MatchOnEmptyGraphIsEmpty) {
    Graph g;
    EXPECT_TRUE(g.match().empty());
    EXPECT_TRUE(g.match(kUid576, kCategory, Term{Literal::integer(1)}).empty());
}

TEST(Graph, FullyBoundMatchEqualsMembership) {
    Graph g;
    Triple t{kUid576, kCategory, Literal::integer(3)};
    g.insert(t);
    EXPECT_EQ(g.match(t.subject, t.predicate, t.object).size(), 1u);
    EXPECT_TRUE(g.contains(t));
    Triple other{kUid576, kCategory, Literal::integer(4)};
    EXPECT_TRUE(g.match(other.subject, other.predicate, other.object).empty());
    EXPECT_FALSE(g.contains(other));
}

TEST(Graph, NumericLiteralsCompareByValue) {
    Graph g;
    const Iri alt{"http://schema.org/ALT"};
    EXPECT_TRUE(g.insert(kUid576, alt, Literal("7.10", Datatype::Float)));
    EXPECT_FALSE(g.insert(kUid576, alt, Literal("7.1", Datatype::Float)));
    // Same value under a different datatype is a different literal.
    EXPECT_TRUE(g.insert(kUid576, alt, Literal("7.1", Datatype::Double)));
    EXPECT_EQ(g.size(), 2u);
}

TEST(Graph, MalformedLiteralIsRejected) {
    EXPECT_THROW(Literal("abc", Datatype::Float), DataError);
    EXPECT_THROW(Literal("1.5", Datatype::Integer), DataError);
    EXPECT_THROW(Literal("yes", Datatype::Boolean), DataError);
    EXPECT_THROW(Iri("not an iri"), DataError);
    EXPECT_THROW(Iri(""), DataError);
}

TEST(Graph, RemoveKeepsIndexesConsistent) {
    testkit::Rng rng(7);
    Graph g;
    std::vector<Triple> inserted;
    for (int i = 0; i < 200; ++i) {
        auto t = testkit::random_triple(rng);
        if (g.insert(t)) inserted.push_back(t);
    }
    for (std::size_t i = 0; i < inserted.size(); i += 2) EXPECT_TRUE(g.remove(inserted[i]));
    EXPECT_FALSE(g.remove(inserted[0]));
    EXPECT_EQ(g.size(), inserted.size() / 2);
    for (std::size_t i = 0; i < inserted.size(); ++i) EXPECT_EQ(g.contains(inserted[i]), i % 2 == 1);
    for (const auto& t : inserted) {
        EXPECT_EQ(g.match(std::nullopt, t.predicate, t.object), scan(g, std::nullopt, t.predicate, t.object));
        EXPECT_EQ(g.match(std::nullopt, std::nullopt, t.object), scan(g, std::nullopt, std::nullopt, t.object));
    }
}

// Every index path must answer exactly what a linear scan answers.
TEST(Graph, IndexesAgreeWithLinearScan) {
    testkit::Rng rng(42);
    for (int round = 0; round < 50; ++round) {
        Graph g;
        std::set<Triple> distinct;
        auto n = testkit::pick(rng, 80);
        for (std::size_t i = 0; i < n; ++i) {
            auto t = testkit::random_triple(rng);
            g.insert(t);
            distinct.insert(t);
        }
        ASSERT_EQ(g.size(), distinct.size());
        for (int probe = 0; probe < 30; ++probe) {
            auto t = testkit::random_triple(rng);
            std::optional<Iri> s, p;
            std::optional<Term> o;
            auto mask = testkit::pick(rng, 8);
            if (mask & 1) s = t.subject;
            if (mask & 2) p = t.predicate;
            if (mask & 4) o = t.object;
            EXPECT_EQ(g.match(s, p, o), scan(g, s, p, o)) << "mask " << mask;
            EXPECT_EQ(g.count(s, p, o), scan(g, s, p, o).size());
        }
    }
}

TEST(NTriples, EmptyTextIsEmptyGraph) {
    EXPECT_EQ(parse_ntriples("").size(), 0u);
    EXPECT_EQ(parse_ntriples("# only a comment\n\n").size(), 0u);
}

TEST(NTriples, ParsesTypedFloatLiteral) {
    auto g = parse_ntriples(
        "<http://example.org/hcv/uid/1> <http://schema.org/AST> "
        "\"53.05\"^^<http://www.w3.org/2001/XMLSchema#float> .\n");
    ASSERT_EQ(g.size(), 1u);
    const auto& lit = std::get<Literal>(g.triples()[0].object);
    EXPECT_EQ(lit.datatype(), Datatype::Float);
    EXPECT_EQ(lit.lexical(), "53.05");
    EXPECT_DOUBLE_EQ(*lit.number(), 53.05);
}

TEST(NTriples, ParseErrorsCarryLocation) {
    try {
        parse_ntriples("<http://a/s> <http://a/p> <http://a/o> .\n<http://a/s> <http://a/p <http://a/o> .\n");
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_GT(e.column(), 0u);
    }
    try {
        parse_ntriples("<http://a/s> <http://a/p> \"bad \\q escape\" .");
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 1u);
        EXPECT_NE(std::string(e.what()).find("escape"), std::string::npos);
    }
    try {
        parse_ntriples("<http://a/s> <http://a/p> <http://a/o>");
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("'.'"), std::string::npos);
    }
    EXPECT_THROW(parse_ntriples("<http://a/s> <http://a/p> \"x\"^^<http://www.w3.org/2001/XMLSchema#float> ."),
                 ParseError);
    EXPECT_THROW(parse_ntriples("_:b0 <http://a/p> <http://a/o> ."), ParseError);
    EXPECT_THROW(parse_ntriples("<http://a/s> <http://a/p> \"unterminated ."), ParseError);
}

TEST(NTriples, UnicodeEscapesDecodeToUtf8) {
    auto g = parse_ntriples("<http://a/s> <http://a/p> \"caf\\u00E9\" .");
    EXPECT_EQ(std::get<Literal>(g.triples()[0].object).lexical(), "caf\xC3\xA9");
}

TEST(NTriples, SerializeEmptyGraph) { EXPECT_EQ(serialize_ntriples(Graph{}), ""); }

TEST(NTriples, SerializationIgnoresInsertionOrder) {
    testkit::Rng rng(3);
    std::vector<Triple> triples;
    for (int i = 0; i < 60; ++i) triples.push_back(testkit::random_triple(rng));
    Graph a, b;
    for (const auto& t : triples) a.insert(t);
    std::shuffle(triples.begin(), triples.end(), rng);
    for (const auto& t : triples) b.insert(t);
    EXPECT_EQ(serialize_ntriples(a), serialize_ntriples(b));
}

TEST(NTriples, RoundTripOnRandomGraphs) {
    testkit::Rng rng(2024);
    for (int i = 0; i < 500; ++i) {
        auto g = testkit::random_graph(rng);
        auto text = serialize_ntriples(g);
        auto back = parse_ntriples(text);
        ASSERT_EQ(back, g) << text;
        ASSERT_EQ(serialize_ntriples(back), text);
    }
}
