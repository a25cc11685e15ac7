#include <liverkg/ingest.hpp>
#include <liverkg/knowledge.hpp>
#include <liverkg/stream.hpp>

#include "support/generators.hpp"
#include "support/hcv_fixture.hpp"
#include "support/stream_oracle.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <future>
#include <sstream>

using namespace liverkg;
using namespace liverkg::stream;
using testkit::hits;
using testkit::oracle_hits;
using testkit::random_lab_rule;

namespace {

const std::vector<Record>& fixture_records() {
    static const auto recs =
        group_records(ingest::records_to_graph(ingest::load_encoded(testkit::synthetic_hcv_csv())));
    return recs;
}

rules::Rule parse(const std::string& text) { return rules::parse_rule(text); }

rdf::Graph fixture_graph() {
    rdf::Graph g;
    for (const auto& r : fixture_records()) g.insert_all(r.triples);
    return g;
}

}  // namespace

TEST(Stream, EmptySource) {
    auto s = run_stream({}, {10, 0}, knowledge::load_diagnostic_rules());
    EXPECT_TRUE(s.batches.empty());
    EXPECT_TRUE(s.events.empty());
    EXPECT_TRUE(s.complete);
}

TEST(Stream, GroupsBySubject) {
    const auto& recs = fixture_records();
    ASSERT_EQ(recs.size(), 615u);
    for (const auto& r : recs) {
        EXPECT_EQ(r.triples.size(), 15u);
        for (const auto& t : r.triples) EXPECT_EQ(t.subject, r.subject);
    }
}

TEST(Stream, GroupKeepsFirstAppearanceOrder) {
    rdf::Iri a("http://a/a"), b("http://a/b"), p("http://a/p");
    auto recs = group_records(std::vector<rdf::Triple>{{b, p, a}, {a, p, b}, {b, p, b}});
    ASSERT_EQ(recs.size(), 2u);
    EXPECT_EQ(recs[0].subject, b);
    EXPECT_EQ(recs[0].triples.size(), 2u);
}

TEST(Stream, SixtyTwoBatchesAtSizeTen) {
    auto s = run_stream(fixture_records(), {10, 0}, knowledge::load_diagnostic_rules());
    ASSERT_EQ(s.batches.size(), 62u);
    for (std::size_t i = 0; i < 61; ++i) EXPECT_EQ(s.batches[i].size, 10u);
    EXPECT_EQ(s.batches.back().batch_no, 62u);
    EXPECT_EQ(s.batches.back().size, 5u);
}

TEST(Stream, RulesParsedCountsFiringRules) {
    auto s = run_stream(fixture_records(), {25, 0}, knowledge::load_diagnostic_rules());
    std::map<std::size_t, std::set<std::string>> fired;
    for (const auto& e : s.events) fired[e.batch_no].insert(e.rule);
    for (const auto& b : s.batches) EXPECT_EQ(b.rules_parsed, fired[b.batch_no].size());
}

TEST(Stream, EventsEqualWholeGraphEvaluation) {
    auto g = fixture_graph();
    testkit::Rng rng(5);
    std::size_t total = 0;
    for (int set = 0; set < 10; ++set) {
        std::vector<rules::Rule> rules;
        auto n = 1 + testkit::pick(rng, 6);
        for (std::size_t i = 0; i < n; ++i) rules.push_back(random_lab_rule(rng, "r" + std::to_string(i)));
        auto expected = oracle_hits(g, rules);
        auto batch = std::size_t{1} + testkit::pick(rng, 100);
        auto s = run_stream(fixture_records(), {batch, 0}, rules);
        EXPECT_EQ(hits(s), expected) << "set " << set << " batch " << batch;
        // exactly one event per (record, rule)
        EXPECT_EQ(s.events.size(), expected.size());
        total += expected.size();
    }
    EXPECT_GT(total, 100u);
}

TEST(Stream, PartitionIndependence) {
    auto rules = knowledge::load_diagnostic_rules();
    auto base = hits(run_stream(fixture_records(), {1, 0}, rules));
    for (std::size_t b : {7u, 10u, 64u, 615u, 1000u}) EXPECT_EQ(hits(run_stream(fixture_records(), {b, 0}, rules)), base);
}

TEST(Stream, EventsCarryBindings) {
    auto rules = knowledge::load_diagnostic_rules();
    auto s = run_stream(fixture_records(), {50, 0}, rules);
    ASSERT_FALSE(s.events.empty());
    for (const auto& e : s.events) {
        EXPECT_EQ(std::get<rdf::Iri>(e.bindings.at("x")), e.subject);
        EXPECT_TRUE(e.bindings.count("ast"));
    }
}

TEST(Stream, BadConfig) {
    Engine eng;
    EXPECT_THROW(eng.run(fixture_records(), {0, 0}), PreconditionError);
    EXPECT_THROW(eng.run(fixture_records(), {10, -1}), PreconditionError);
}

TEST(Stream, DelayIsNotCountedAsElapsed) {
    std::vector<Record> few(fixture_records().begin(), fixture_records().begin() + 6);
    auto t0 = Clock::now();
    auto s = run_stream(few, {2, 40}, knowledge::load_diagnostic_rules());
    double wall = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    ASSERT_EQ(s.batches.size(), 3u);
    EXPECT_GE(wall, 80.0);
    for (const auto& b : s.batches) EXPECT_LT(b.elapsed_ms, 40.0);
}

TEST(Deploy, IdleEngine) {
    Engine eng;
    EXPECT_GE(eng.deploy(parse("any: Patient(?x) -> seen(?x, true)")), 0.0);
    ASSERT_EQ(eng.active().size(), 1u);
    auto s = eng.run(fixture_records(), {100, 0});
    EXPECT_EQ(s.events.size(), 615u);
    EXPECT_EQ(s.events.front().batch_no, 1u);
}

TEST(Deploy, InvalidRuleLeavesActiveSet) {
    Engine eng;
    eng.deploy(parse("any: Patient(?x) -> seen(?x, true)"));
    EXPECT_THROW(eng.deploy(rules::Rule{"bad", {rules::ClassAtom{"A", rules::var("x")}}, {}}), Error);
    EXPECT_THROW(eng.deploy(parse("Patient(?x) -> seen(?x, true)")), DataError);  // unnamed
    ASSERT_EQ(eng.active().size(), 1u);
    EXPECT_EQ(eng.active()[0].name, "any");
}

TEST(Deploy, RedeployReplacesByName) {
    Engine eng;
    eng.deploy(parse("r: Patient(?x) -> seen(?x, true)"));
    eng.deploy(parse("r: Patient(?x) ^ hasValueAST(?x, ?a) ^ swrlb:greaterThan(?a, 1000) -> seen(?x, true)"));
    ASSERT_EQ(eng.active().size(), 1u);
    EXPECT_TRUE(eng.run(fixture_records(), {100, 0}).events.empty());
}

TEST(Undeploy, UnknownAndFrozen) {
    Engine eng;
    EXPECT_FALSE(eng.undeploy("nope"));
    eng.deploy(parse("any: Patient(?x) -> seen(?x, true)"));
    auto first = eng.run(fixture_records(), {100, 0}).events.size();
    EXPECT_TRUE(eng.undeploy("any"));
    EXPECT_EQ(first, 615u);
    EXPECT_TRUE(eng.run(fixture_records(), {100, 0}).events.empty());
    EXPECT_FALSE(eng.undeploy("any"));
}

// The sink holds batch `hold` open until a change is queued from another
// thread, so the change lands exactly at the following boundary.
namespace {
struct TwoPhase {
    Engine eng;
    std::size_t hold = 3;
    std::atomic<bool> reached{false};

    Summary run(std::function<void()> change) {
        auto worker = std::async(std::launch::async, [&] {
            while (!reached) std::this_thread::sleep_for(std::chrono::milliseconds(1));
            change();
        });
        auto s = eng.run(fixture_records(), {10, 0}, [&](const Event& e) {
            if (e.batch_no != hold || reached) return;
            reached = true;
            while (eng.pending() == 0) std::this_thread::sleep_for(std::chrono::milliseconds(1));
        });
        worker.get();
        return s;
    }
};
}  // namespace

TEST(Deploy, MidStreamIsNotRetroactive) {
    TwoPhase tp;
    tp.eng.deploy(parse("any: Patient(?x) -> seen(?x, true)"));
    double waited = -1;
    auto s = tp.run([&] { waited = tp.eng.deploy(parse("late: Patient(?x) -> late(?x, true)")); });
    EXPECT_GE(waited, 0.0);
    auto changes = tp.eng.changes();
    auto it = std::find_if(changes.begin(), changes.end(), [](const RuleChange& c) { return c.rule == "late"; });
    ASSERT_NE(it, changes.end());
    EXPECT_EQ(it->from_batch, tp.hold + 1);
    std::size_t late = 0;
    for (const auto& e : s.events)
        if (e.rule == "late") {
            EXPECT_GE(e.batch_no, it->from_batch);
            ++late;
        }
    // Every record from the activation batch on.
    EXPECT_EQ(late, 615u - tp.hold * 10);
}

TEST(Undeploy, MidStreamStopsEvents) {
    TwoPhase tp;
    tp.eng.deploy(parse("any: Patient(?x) -> seen(?x, true)"));
    tp.eng.deploy(parse("other: Patient(?x) -> seen2(?x, true)"));
    bool removed = false;
    auto s = tp.run([&] { removed = tp.eng.undeploy("other"); });
    EXPECT_TRUE(removed);
    std::size_t other = 0;
    for (const auto& e : s.events)
        if (e.rule == "other") {
            EXPECT_LE(e.batch_no, tp.hold);
            ++other;
        }
    EXPECT_EQ(other, tp.hold * 10);
}

TEST(Deploy, TimeRecordedWithAndWithoutEvents) {
    for (const char* text : {"quiet: Patient(?x) ^ hasValueAST(?x, ?a) ^ swrlb:greaterThan(?a, 10000) -> q(?x, true)",
                             "busy: Patient(?x) -> b(?x, true)"}) {
        TwoPhase tp;
        tp.eng.deploy(parse("any: Patient(?x) -> seen(?x, true)"));
        double ms = -1;
        tp.run([&] { ms = tp.eng.deploy(parse(text)); });
        EXPECT_GE(ms, 0.0) << text;
        EXPECT_TRUE(std::isfinite(ms));
    }
}

TEST(Sink, JsonLines) {
    std::ostringstream out;
    std::vector<Record> one(fixture_records().begin(), fixture_records().begin() + 1);
    run_stream(one, {1, 0}, {parse("any: Patient(?x) -> seen(?x, true)")}, json_lines_sink(out));
    auto line = out.str();
    ASSERT_EQ(std::count(line.begin(), line.end(), '\n'), 1);
    auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j["rule"], "any");
    EXPECT_EQ(j["batch"], 1);
    EXPECT_EQ(j["subject"], one[0].subject.str());
    EXPECT_EQ(j["bindings"]["x"], "<" + one[0].subject.str() + ">");
}

TEST(Sink, FailureAbortsRun) {
    std::ostringstream out;
    out.setstate(std::ios::badbit);
    auto s = run_stream(fixture_records(), {10, 0}, {parse("any: Patient(?x) -> seen(?x, true)")}, json_lines_sink(out));
    EXPECT_FALSE(s.complete);
    EXPECT_NE(s.error.find("sink"), std::string::npos);
    EXPECT_EQ(s.batches.size(), 1u);
    EXPECT_TRUE(s.events.empty());

    int n = 0;
    auto partial = run_stream(fixture_records(), {10, 0}, {parse("any: Patient(?x) -> seen(?x, true)")},
                              [&](const Event&) {
                                  if (++n > 25) throw std::runtime_error("disk full");
                              });
    EXPECT_FALSE(partial.complete);
    EXPECT_EQ(partial.events.size(), 25u);
    EXPECT_EQ(partial.batches.size(), 3u);
}

TEST(Timing, SingleRunOneRow) {
    TimedRun r{10, 5, run_stream(fixture_records(), {10, 0}, {parse("any: Patient(?x) -> seen(?x, true)")})};
    auto rows = timing_report({r});
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].runs.size(), 1u);
    EXPECT_DOUBLE_EQ(rows[0].mean_ms, mean_batch_ms(r.summary));
    EXPECT_THROW(timing_report({}), PreconditionError);
}

TEST(Timing, AggregatesByConfig) {
    Summary a, b, c;
    a.batches = {{1, 10, 0, 2.0}, {2, 10, 0, 4.0}};
    b.batches = {{1, 10, 0, 6.0}};
    c.batches = {{1, 20, 0, 1.0}};
    auto rows = timing_report({{10, 5, a}, {20, 5, c}, {10, 5, b}});
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].runs, (std::vector<double>{3.0, 6.0}));
    EXPECT_DOUBLE_EQ(rows[0].mean_ms, 4.5);
    EXPECT_EQ(rows[1].batch_size, 20u);
    EXPECT_EQ(timing_csv(rows), "batch_size,rule_count,mean_ms,runs_ms\n10,5,4.5000,3.0000;6.0000\n20,5,1.0000,1.0000\n");
}

TEST(Timing, Grids) {
    auto b = sweep_grid(SweepKind::BatchSize);
    ASSERT_EQ(b.size(), 5u);
    EXPECT_EQ(b.front().batch_size, 20u);
    EXPECT_EQ(b.back().batch_size, 100u);
    for (const auto& p : b) EXPECT_EQ(p.rule_count, 5u);
    auto r = sweep_grid(SweepKind::RuleCount);
    EXPECT_EQ(r.front().rule_count, 4u);
    EXPECT_EQ(r.back().rule_count, 12u);
    for (const auto& p : r) EXPECT_EQ(p.batch_size, 50u);
}

TEST(Timing, SweepShape) {
    auto rows = run_sweep(fixture_records(), knowledge::load_diagnostic_rules(), sweep_grid(SweepKind::RuleCount), 2);
    ASSERT_EQ(rows.size(), 5u);
    for (const auto& row : rows) EXPECT_EQ(row.runs.size(), 2u);
    EXPECT_THROW(run_sweep(fixture_records(), {}, sweep_grid(SweepKind::RuleCount), 1), PreconditionError);
}

TEST(Spearman, KnownValues) {
    EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {10, 20, 30, 40}), 1.0);
    EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4}, {4, 3, 2, 1}), -1.0);
    EXPECT_DOUBLE_EQ(spearman({1, 2, 3, 4, 5}, {1, 8, 27, 64, 125}), 1.0);
    // Hand computation: ranks y = (1, 2.5, 2.5, 4), x = (1, 2, 3, 4).
    // cov = 4.5/4, var x = 5/4, var y = 4.5/4, rho = 4.5 / sqrt(5 * 4.5).
    EXPECT_NEAR(spearman({1, 2, 3, 4}, {1, 2, 2, 3}), 4.5 / std::sqrt(22.5), 1e-12);
    EXPECT_THROW(spearman({1}, {1}), PreconditionError);
}

TEST(Csv, Stats) {
    Summary s;
    s.batches = {{1, 10, 2, 0.5}};
    EXPECT_EQ(stats_csv(s), "batch,size,rules_parsed,elapsed_ms\n1,10,2,0.5000\n");
}
