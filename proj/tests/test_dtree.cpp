#include <liverkg/dtree.hpp>
#include <liverkg/reasoner.hpp>

#include "support/generators.hpp"
#include "support/hcv_fixture.hpp"
#include "support/records.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace liverkg;
using namespace liverkg::dtree;

namespace {

Dataset toy(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels, int classes = 2) {
    Dataset d;
    for (std::size_t f = 0; f < rows.front().size(); ++f) d.feature_names.push_back("f" + std::to_string(f));
    d.rows = rows;
    d.labels = labels;
    d.class_count = classes;
    return d;
}

Dataset random_dataset(testkit::Rng& rng, std::size_t n, std::size_t features, int classes) {
    std::vector<std::vector<double>> rows(n, std::vector<double>(features));
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& v : rows[i]) v = static_cast<double>(testkit::pick(rng, 8));  // many ties on purpose
        labels[i] = static_cast<int>(testkit::pick(rng, static_cast<std::size_t>(classes)));
    }
    return toy(rows, labels, classes);
}

// Textbook CART written the slow way: every candidate threshold is
// evaluated by re-partitioning the node from scratch.
struct OracleNode {
    int feature = -1;
    double threshold = 0;
    int predicted = 0;
    std::unique_ptr<OracleNode> left, right;
};

double oracle_gini(const std::vector<int>& labels, int k) {
    if (labels.empty()) return 0;
    double s = 0;
    for (int c = 0; c < k; ++c) {
        double p = static_cast<double>(std::count(labels.begin(), labels.end(), c)) / labels.size();
        s += p * p;
    }
    return 1 - s;
}

std::unique_ptr<OracleNode> oracle_fit(const Dataset& d, const std::vector<std::size_t>& idx) {
    auto node = std::make_unique<OracleNode>();
    std::vector<int> labels;
    for (auto i : idx) labels.push_back(d.labels[i]);
    std::vector<int> counts(d.class_count, 0);
    for (int l : labels) ++counts[l];
    node->predicted = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    if (oracle_gini(labels, d.class_count) == 0) return node;

    double best = 1e300;
    for (std::size_t f = 0; f < d.feature_names.size(); ++f) {
        std::set<double> values;
        for (auto i : idx) values.insert(d.rows[i][f]);
        std::vector<double> v(values.begin(), values.end());
        for (std::size_t j = 1; j < v.size(); ++j) {
            double t = (v[j - 1] + v[j]) / 2.0;
            std::vector<int> l, r;
            for (auto i : idx) (d.rows[i][f] <= t ? l : r).push_back(d.labels[i]);
            double score = (l.size() * oracle_gini(l, d.class_count) + r.size() * oracle_gini(r, d.class_count)) / idx.size();
            if (score < best - 1e-12) {
                best = score;
                node->feature = static_cast<int>(f);
                node->threshold = t;
            }
        }
    }
    if (node->feature < 0) return node;
    std::vector<std::size_t> l, r;
    for (auto i : idx) (d.rows[i][node->feature] <= node->threshold ? l : r).push_back(i);
    node->left = oracle_fit(d, l);
    node->right = oracle_fit(d, r);
    return node;
}

bool same_tree(const Tree& t, int i, const OracleNode& o) {
    const auto& n = t.nodes[i];
    if (n.feature != o.feature) return false;
    if (n.is_leaf()) return n.predicted == o.predicted;
    return n.threshold == o.threshold && same_tree(t, n.left, *o.left) && same_tree(t, n.right, *o.right);
}

}  // namespace

TEST(Impurity, Examples) {
    std::vector<std::size_t> pure{7, 0, 0, 0, 0}, half{5, 5}, mixed{2, 1, 1};
    EXPECT_DOUBLE_EQ(impurity(pure, Criterion::Gini), 0.0);
    EXPECT_DOUBLE_EQ(impurity(half, Criterion::Gini), 0.5);
    EXPECT_DOUBLE_EQ(impurity(mixed, Criterion::Gini), 0.625);
    EXPECT_DOUBLE_EQ(impurity(half, Criterion::Entropy), 1.0);
    EXPECT_DOUBLE_EQ(impurity(mixed, Criterion::Entropy), 1.5);
    EXPECT_DOUBLE_EQ(impurity(pure, Criterion::Entropy), 0.0);
    std::vector<std::size_t> zero{0, 0};
    EXPECT_THROW(impurity(zero, Criterion::Gini), DataError);
}

TEST(Impurity, Bounds) {
    testkit::Rng rng(1);
    for (int i = 0; i < 500; ++i) {
        std::vector<std::size_t> five(5), two(2);
        for (auto& c : five) c = testkit::pick(rng, 20);
        for (auto& c : two) c = testkit::pick(rng, 20);
        five[0] += 1;
        two[1] += 1;
        double g5 = impurity(five, Criterion::Gini);
        EXPECT_GE(g5, 0.0);
        EXPECT_LE(g5, 0.8 + 1e-12);
        for (auto crit : {Criterion::Gini, Criterion::Entropy}) {
            double v = impurity(two, crit);
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0 + 1e-12);
        }
    }
}

TEST(Fit, SingleClassIsOneLeaf) {
    auto t = fit(toy({{1}, {2}, {3}}, {1, 1, 1}));
    EXPECT_EQ(t.nodes.size(), 1u);
    EXPECT_EQ(t.root().predicted, 1);
    EXPECT_EQ(predict(t, std::vector<double>{100}), 1);
    auto importance = feature_importance(t);
    EXPECT_EQ(importance.at("f0"), 0.0);
    auto paths = extract_paths(t);
    ASSERT_EQ(paths.size(), 1u);
    EXPECT_TRUE(paths[0].conditions.empty());
}

TEST(Fit, ToySplitAtMidpoint) {
    auto t = fit(toy({{1}, {3}}, {0, 1}));
    EXPECT_EQ(t.depth(), 1u);
    EXPECT_EQ(t.root().feature, 0);
    EXPECT_DOUBLE_EQ(t.root().threshold, 2.0);
    EXPECT_EQ(predict(t, std::vector<double>{0}), 0);
    EXPECT_EQ(predict(t, std::vector<double>{2}), 0);
    EXPECT_EQ(predict(t, std::vector<double>{2.5}), 1);
    EXPECT_DOUBLE_EQ(feature_importance(t).at("f0"), 1.0);
    auto paths = extract_paths(t);
    ASSERT_EQ(paths.size(), 2u);
    EXPECT_EQ(paths[0].conditions.size(), 1u);
    EXPECT_EQ(paths[0].conditions[0].op, CmpOp::LessEqual);
    EXPECT_DOUBLE_EQ(paths[0].conditions[0].threshold, 2.0);
    EXPECT_EQ(paths[0].category, 0);
    EXPECT_EQ(paths[1].conditions[0].op, CmpOp::Greater);
    EXPECT_EQ(paths[1].category, 1);
}

TEST(Fit, TieBreaksToLowerFeature) {
    // Both features separate perfectly; feature 0 must win.
    auto t = fit(toy({{1, 10}, {2, 20}, {3, 30}, {4, 40}}, {0, 0, 1, 1}));
    EXPECT_EQ(t.root().feature, 0);
    EXPECT_DOUBLE_EQ(t.root().threshold, 2.5);
}

TEST(Fit, RejectsBadInput) {
    Dataset empty;
    empty.feature_names = {"a"};
    EXPECT_THROW(fit(empty), DataError);
    TrainConfig bad;
    bad.min_samples_leaf = 0;
    EXPECT_THROW(fit(toy({{1}}, {0}), bad), DataError);
}

TEST(Fit, MatchesSlowOracleOnRandomData) {
    testkit::Rng rng(31);
    for (int i = 0; i < 80; ++i) {
        auto d = random_dataset(rng, 5 + testkit::pick(rng, 40), 1 + testkit::pick(rng, 4), 2 + static_cast<int>(testkit::pick(rng, 4)));
        auto t = fit(d);
        std::vector<std::size_t> idx(d.size());
        std::iota(idx.begin(), idx.end(), 0);
        auto o = oracle_fit(d, idx);
        ASSERT_TRUE(same_tree(t, 0, *o)) << "dataset " << i;
    }
}

TEST(Fit, Deterministic) {
    testkit::Rng rng(4);
    auto d = random_dataset(rng, 120, 5, 5);
    auto a = fit(d), b = fit(d);
    ASSERT_EQ(a.nodes.size(), b.nodes.size());
    for (std::size_t i = 0; i < a.nodes.size(); ++i) {
        EXPECT_EQ(a.nodes[i].feature, b.nodes[i].feature);
        EXPECT_EQ(a.nodes[i].threshold, b.nodes[i].threshold);
    }
}

TEST(Fit, RespectsLimits) {
    testkit::Rng rng(9);
    auto d = random_dataset(rng, 200, 4, 3);
    TrainConfig c;
    c.max_depth = 3;
    EXPECT_LE(fit(d, c).depth(), 3u);
    TrainConfig leaf;
    leaf.min_samples_leaf = 10;
    for (const auto& n : fit(d, leaf).nodes) EXPECT_GE(n.samples, 10u);
}

TEST(Predict, MissingFeatureIsAnError) {
    auto t = fit(toy({{1, 0}, {3, 0}}, {0, 1}));
    EXPECT_THROW(predict(t, std::map<std::string, double>{{"f1", 1.0}}), DataError);
    EXPECT_EQ(predict(t, std::map<std::string, double>{{"f0", 5.0}}), 1);
}

TEST(Paths, ExactlyOnePathHoldsAndAgreesWithTree) {
    testkit::Rng rng(12);
    for (int i = 0; i < 60; ++i) {
        auto d = random_dataset(rng, 10 + testkit::pick(rng, 80), 3, 5);
        auto t = fit(d);
        auto paths = extract_paths(t);
        EXPECT_EQ(paths.size(), t.leaf_count());
        for (int probe = 0; probe < 40; ++probe) {
            std::vector<double> x(3);
            for (auto& v : x) v = static_cast<double>(testkit::pick(rng, 10)) - 0.5;
            int matched = 0, category = -1;
            for (const auto& p : paths) {
                bool all = true;
                for (const auto& c : p.conditions) {
                    auto f = std::find(d.feature_names.begin(), d.feature_names.end(), c.feature) - d.feature_names.begin();
                    all = all && holds(c, x[static_cast<std::size_t>(f)]);
                }
                if (all) {
                    ++matched;
                    category = p.category;
                }
            }
            ASSERT_EQ(matched, 1);
            ASSERT_EQ(category, predict(t, x));
        }
    }
}

TEST(Paths, HepatitisPathBecomesPublishedRule) {
    Path p;
    p.conditions = {{"AST", CmpOp::LessEqual, 53.05},
                    {"ALP", CmpOp::LessEqual, 52.3},
                    {"BIL", CmpOp::LessEqual, 11.0},
                    {"ALT", CmpOp::LessEqual, 9.25}};
    p.category = 2;
    auto rules = paths_to_rules({p}, default_feature_properties(), default_class_heads());
    EXPECT_EQ(rules::serialize_rule(rules[0]),
              "dt1: Patient(?x) ^ hasValueAST(?x, ?ast) ^ swrlb:lessThanOrEqualTo(?ast, \"53.05\"^^xsd:float) ^ "
              "hasValueALP(?x, ?alp) ^ swrlb:lessThanOrEqualTo(?alp, \"52.3\"^^xsd:float) ^ hasValueBIL(?x, ?bil) ^ "
              "swrlb:lessThanOrEqualTo(?bil, \"11.0\"^^xsd:float) ^ hasValueALT(?x, ?alt) ^ "
              "swrlb:lessThanOrEqualTo(?alt, \"9.25\"^^xsd:float) -> isHepatitisCpatient(?x, true)");
    EXPECT_EQ(describe(p), "If AST <= 53.05 and ALP <= 52.3 and BIL <= 11.0 and ALT <= 9.25 then Patient has Hepatitis C");
}

TEST(Paths, EmptyPathRule) {
    Path p;
    p.category = 0;
    auto r = paths_to_rules({p}, default_feature_properties(), default_class_heads());
    EXPECT_EQ(rules::serialize_rule(r[0]), "dt1: Patient(?x) -> isHealthy(?x, true)");
}

TEST(Paths, UnmappedFeatureOrClass) {
    Path p{{{"XYZ", CmpOp::Greater, 1.0}}, 0};
    EXPECT_THROW(paths_to_rules({p}, default_feature_properties(), default_class_heads()), DataError);
    Path q{{}, 9};
    EXPECT_THROW(paths_to_rules({q}, default_feature_properties(), default_class_heads()), DataError);
}

// Extracted rules, run through the reasoner, classify every record exactly
// as the tree does.
TEST(Paths, RulesAgreeWithTreeOnFixture) {
    auto records = ingest::load_encoded(testkit::synthetic_hcv_csv());
    auto tree = fit(make_dataset(records));
    auto rules = paths_to_rules(extract_paths(tree), default_feature_properties(), default_class_heads());
    EXPECT_EQ(rules::parse_rule_file(rules::serialize_rule_file(rules)), rules);

    rdf::Graph g;
    for (const auto& r : records) ingest::append_record(g, r, false);
    auto vocab = Vocabulary::clinical();
    auto result = rules::infer(g, rules, vocab);
    auto heads = default_class_heads();
    for (const auto& r : records) {
        int fired = 0, category = -1;
        for (const auto& [c, head] : heads)
            if (result.derived.contains({r.uid, vocab.resolve(head), rdf::Literal::boolean(true)})) {
                ++fired;
                category = c;
            }
        ASSERT_EQ(fired, 1) << r.uid.str();
        ASSERT_EQ(category, predict(tree, r)) << r.uid.str();
    }
}

TEST(Score, HandComputedMetrics) {
    // truth 0 0 1 1, predicted 0 1 1 1: class 0 P=1 R=.5, class 1 P=2/3 R=1.
    auto m = score({0, 0, 1, 1}, {0, 1, 1, 1}, 2);
    EXPECT_DOUBLE_EQ(m.accuracy, 0.75);
    EXPECT_DOUBLE_EQ(m.macro_precision, (1.0 + 2.0 / 3.0) / 2);
    EXPECT_DOUBLE_EQ(m.macro_recall, 0.75);
    EXPECT_NEAR(m.macro_f1, (2.0 / 3.0 + 0.8) / 2, 1e-12);
    EXPECT_DOUBLE_EQ(m.weighted_recall, m.accuracy);
    // An absent class drags the macro average down.
    auto three = score({0, 0, 1, 1}, {0, 1, 1, 1}, 3);
    EXPECT_NEAR(three.macro_recall, 1.5 / 3, 1e-12);
}

TEST(CrossValidate, FoldsAreStratified) {
    std::vector<int> labels;
    for (int c = 0; c < 5; ++c)
        for (int i = 0; i < 7 + c * 13; ++i) labels.push_back(c);
    auto fold = stratified_folds(labels, 5, 10, 42);
    for (int c = 0; c < 5; ++c) {
        std::vector<int> per(10, 0);
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == c) ++per[fold[i]];
        EXPECT_LE(*std::max_element(per.begin(), per.end()) - *std::min_element(per.begin(), per.end()), 1);
    }
}

TEST(CrossValidate, SeparableDataScoresPerfectly) {
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    // Classes sit in [0, 19] and [100, 119]: with no gap a held-out
    // boundary point can fall on the learned midpoint.
    for (int i = 0; i < 40; ++i) {
        rows.push_back({static_cast<double>(i < 20 ? i : 80 + i)});
        labels.push_back(i < 20 ? 0 : 1);
    }
    auto cv = cross_validate(toy(rows, labels), {}, 5);
    EXPECT_DOUBLE_EQ(cv.mean.accuracy, 1.0);
    EXPECT_EQ(cv.folds.size(), 5u);
}

TEST(CrossValidate, RejectsBadFoldCounts) {
    auto d = toy({{1}, {2}, {3}}, {0, 1, 0});
    EXPECT_THROW(cross_validate(d, {}, 1), DataError);
    EXPECT_THROW(cross_validate(d, {}, 4), DataError);
}

TEST(CrossValidate, MetricsInUnitInterval) {
    auto d = make_dataset(ingest::load_encoded(testkit::synthetic_hcv_csv()));
    for (auto crit : {Criterion::Gini, Criterion::Entropy}) {
        TrainConfig c;
        c.criterion = crit;
        auto cv = cross_validate(d, c, 10);
        EXPECT_EQ(cv.folds.size(), 10u);
        for (double v : {cv.mean.accuracy, cv.mean.macro_precision, cv.mean.macro_recall, cv.mean.macro_f1}) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    }
}

TEST(FeatureImportance, SumsToOne) {
    auto d = make_dataset(ingest::load_encoded(testkit::synthetic_hcv_csv()));
    auto imp = feature_importance(fit(d));
    double total = 0;
    for (const auto& [k, v] : imp) total += v;
    EXPECT_NEAR(total, 1.0, 1e-9);
    EXPECT_EQ(imp.size(), 12u);
}
