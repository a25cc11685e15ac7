#pragma once

#include <liverkg/error.hpp>
#include <liverkg/ingest.hpp>
#include <liverkg/rules.hpp>
#include <liverkg/term.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace liverkg::dtree {

inline constexpr int category_count = 5;

enum class Criterion { Gini, Entropy };

inline std::string_view criterion_name(Criterion c) { return c == Criterion::Gini ? "gini" : "entropy"; }

inline Criterion parse_criterion(std::string_view s) {
    if (s == "gini") return Criterion::Gini;
    if (s == "entropy") return Criterion::Entropy;
    throw DataError("unknown criterion '" + std::string(s) + "' (expected gini or entropy)");
}

struct TrainConfig {
    Criterion criterion = Criterion::Gini;
    std::optional<std::size_t> max_depth;
    std::size_t min_samples_leaf = 1;
    std::uint64_t random_seed = 0;
};

// Feature matrix with integer class labels in [0, class_count).
struct Dataset {
    std::vector<std::string> feature_names;
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    int class_count = category_count;

    std::size_t size() const noexcept { return rows.size(); }
};

// Fixed feature order; split ties resolve to the earliest feature here.
inline const std::vector<std::string>& clinical_features() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v{"Age", "Sex"};
        for (auto lab : lab_names) v.emplace_back(lab);
        return v;
    }();
    return names;
}

inline std::vector<double> feature_vector(const ingest::EncodedRecord& r) {
    std::vector<double> x{static_cast<double>(r.age), static_cast<double>(r.sex)};
    x.insert(x.end(), r.labs.begin(), r.labs.end());
    return x;
}

inline Dataset make_dataset(const std::vector<ingest::EncodedRecord>& records) {
    Dataset d;
    d.feature_names = clinical_features();
    for (const auto& r : records) {
        d.rows.push_back(feature_vector(r));
        d.labels.push_back(r.category);
    }
    return d;
}

// Gini: 1 - sum p^2. Entropy: -sum p log2 p with 0 log 0 = 0.
inline double impurity(std::span<const std::size_t> counts, Criterion criterion) {
    double total = 0;
    for (auto c : counts) total += static_cast<double>(c);
    if (total <= 0) throw DataError("impurity of an empty node is undefined");
    double acc = 0;
    for (auto c : counts) {
        if (c == 0) continue;
        double p = static_cast<double>(c) / total;
        acc += criterion == Criterion::Gini ? p * p : -p * std::log2(p);
    }
    return criterion == Criterion::Gini ? 1.0 - acc : acc;
}

struct Node {
    int feature = -1;  // -1 for leaves
    double threshold = 0.0;
    int left = -1;   // value <= threshold
    int right = -1;  // value > threshold
    std::vector<std::size_t> class_counts;
    int predicted = 0;
    double impurity = 0.0;
    std::size_t samples = 0;

    bool is_leaf() const noexcept { return feature < 0; }
};

struct Tree {
    std::vector<std::string> feature_names;
    std::vector<Node> nodes;  // root at index 0
    Criterion criterion = Criterion::Gini;

    const Node& root() const { return nodes.at(0); }

    std::size_t leaf_count() const {
        return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const Node& n) { return n.is_leaf(); }));
    }

    std::size_t depth() const { return depth_from(0); }

private:
    std::size_t depth_from(int i) const {
        const auto& n = nodes[i];
        if (n.is_leaf()) return 0;
        return 1 + std::max(depth_from(n.left), depth_from(n.right));
    }
};

namespace detail {

inline int argmax(const std::vector<std::size_t>& counts) {
    int best = 0;
    for (int c = 1; c < static_cast<int>(counts.size()); ++c)
        if (counts[c] > counts[best]) best = c;
    return best;
}

class Builder {
public:
    Builder(const Dataset& data, const TrainConfig& config) : data_(data), config_(config) {}

    Tree build() {
        tree_.feature_names = data_.feature_names;
        tree_.criterion = config_.criterion;
        std::vector<std::size_t> idx(data_.size());
        std::iota(idx.begin(), idx.end(), 0);
        grow(idx, 0);
        return std::move(tree_);
    }

private:
    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double score = 0.0;
    };

    std::vector<std::size_t> counts_of(const std::vector<std::size_t>& idx) const {
        std::vector<std::size_t> counts(static_cast<std::size_t>(data_.class_count), 0);
        for (auto i : idx) ++counts[static_cast<std::size_t>(data_.labels[i])];
        return counts;
    }

    int grow(const std::vector<std::size_t>& idx, std::size_t depth) {
        Node node;
        node.class_counts = counts_of(idx);
        node.samples = idx.size();
        node.impurity = impurity(node.class_counts, config_.criterion);
        node.predicted = argmax(node.class_counts);
        int self = static_cast<int>(tree_.nodes.size());
        tree_.nodes.push_back(node);

        bool pure = node.impurity <= 0.0;
        bool depth_ok = !config_.max_depth || depth < *config_.max_depth;
        if (pure || !depth_ok || idx.size() < 2 * config_.min_samples_leaf) return self;
        auto split = best_split(idx);
        if (!split) return self;

        std::vector<std::size_t> left, right;
        for (auto i : idx) (data_.rows[i][split->feature] <= split->threshold ? left : right).push_back(i);
        int l = grow(left, depth + 1);
        int r = grow(right, depth + 1);
        auto& n = tree_.nodes[self];
        n.feature = split->feature;
        n.threshold = split->threshold;
        n.left = l;
        n.right = r;
        return self;
    }

    // Minimum weighted child impurity over midpoints of adjacent distinct
    // values; ties go to the lower feature index, then the lower threshold.
    std::optional<Split> best_split(const std::vector<std::size_t>& idx) const {
        std::optional<Split> best;
        const auto n = idx.size();
        const auto k = static_cast<std::size_t>(data_.class_count);
        std::vector<std::size_t> sorted = idx;
        std::vector<std::size_t> left(k), right(k);
        for (int f = 0; f < static_cast<int>(data_.feature_names.size()); ++f) {
            std::stable_sort(sorted.begin(), sorted.end(),
                             [&](std::size_t a, std::size_t b) { return data_.rows[a][f] < data_.rows[b][f]; });
            std::fill(left.begin(), left.end(), 0);
            right = counts_of(sorted);
            for (std::size_t pos = 1; pos < n; ++pos) {
                auto moved = static_cast<std::size_t>(data_.labels[sorted[pos - 1]]);
                ++left[moved];
                --right[moved];
                double lo = data_.rows[sorted[pos - 1]][f];
                double hi = data_.rows[sorted[pos]][f];
                if (!(lo < hi)) continue;
                if (pos < config_.min_samples_leaf || n - pos < config_.min_samples_leaf) continue;
                double score = (static_cast<double>(pos) * impurity(left, config_.criterion) +
                                static_cast<double>(n - pos) * impurity(right, config_.criterion)) /
                               static_cast<double>(n);
                if (!best || score < best->score - 1e-12) best = Split{f, (lo + hi) / 2.0, score};
            }
        }
        return best;
    }

    const Dataset& data_;
    const TrainConfig& config_;
    Tree tree_;
};

}  // namespace detail

inline Tree fit(const Dataset& data, const TrainConfig& config = {}) {
    if (data.size() == 0) throw DataError("cannot fit a decision tree on an empty dataset");
    if (config.min_samples_leaf < 1) throw DataError("min_samples_leaf must be at least 1");
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.rows[i].size() != data.feature_names.size())
            throw DataError("row " + std::to_string(i) + " has the wrong number of features");
        if (data.labels[i] < 0 || data.labels[i] >= data.class_count)
            throw DataError("row " + std::to_string(i) + " has an out-of-range label");
    }
    return detail::Builder(data, config).build();
}

inline int predict(const Tree& tree, std::span<const double> x) {
    int i = 0;
    while (!tree.nodes[i].is_leaf()) {
        const auto& n = tree.nodes[i];
        if (static_cast<std::size_t>(n.feature) >= x.size())
            throw DataError("record is missing feature " + tree.feature_names[n.feature]);
        i = x[n.feature] <= n.threshold ? n.left : n.right;
    }
    return tree.nodes[i].predicted;
}

// Named-feature form; only the features the tree actually tests are required.
inline int predict(const Tree& tree, const std::map<std::string, double>& features) {
    int i = 0;
    while (!tree.nodes[i].is_leaf()) {
        const auto& n = tree.nodes[i];
        auto it = features.find(tree.feature_names[n.feature]);
        if (it == features.end()) throw DataError("record is missing feature " + tree.feature_names[n.feature]);
        i = it->second <= n.threshold ? n.left : n.right;
    }
    return tree.nodes[i].predicted;
}

inline int predict(const Tree& tree, const ingest::EncodedRecord& r) { return predict(tree, feature_vector(r)); }

// Mean decrease in impurity per feature, normalized to sum to 1.
inline std::map<std::string, double> feature_importance(const Tree& tree) {
    std::vector<double> acc(tree.feature_names.size(), 0.0);
    for (const auto& n : tree.nodes) {
        if (n.is_leaf()) continue;
        const auto& l = tree.nodes[n.left];
        const auto& r = tree.nodes[n.right];
        acc[n.feature] += static_cast<double>(n.samples) * n.impurity - static_cast<double>(l.samples) * l.impurity -
                          static_cast<double>(r.samples) * r.impurity;
    }
    double total = std::accumulate(acc.begin(), acc.end(), 0.0);
    std::map<std::string, double> out;
    for (std::size_t f = 0; f < acc.size(); ++f) out[tree.feature_names[f]] = total > 0 ? acc[f] / total : 0.0;
    return out;
}

enum class CmpOp { LessEqual, Greater };

struct Condition {
    std::string feature;
    CmpOp op;
    double threshold;
    friend bool operator==(const Condition&, const Condition&) = default;
};

struct Path {
    std::vector<Condition> conditions;
    int category = 0;
};

inline bool holds(const Condition& c, double value) {
    return c.op == CmpOp::LessEqual ? value <= c.threshold : value > c.threshold;
}

// One path per leaf, left (<=) branches first.
inline std::vector<Path> extract_paths(const Tree& tree) {
    std::vector<Path> out;
    std::vector<Condition> stack;
    auto walk = [&](auto&& self, int i) -> void {
        const auto& n = tree.nodes[i];
        if (n.is_leaf()) {
            out.push_back({stack, n.predicted});
            return;
        }
        stack.push_back({tree.feature_names[n.feature], CmpOp::LessEqual, n.threshold});
        self(self, n.left);
        stack.back().op = CmpOp::Greater;
        self(self, n.right);
        stack.pop_back();
    };
    walk(walk, 0);
    return out;
}

inline std::string category_label(int c) {
    switch (c) {
        case 0: return "Patient is Healthy";
        case 1: return "Patient shows signs of liver abnormality";
        case 2: return "Patient has Hepatitis C";
        case 3: return "Patient has Fibrosis";
        case 4: return "Patient has Cirrhosis";
    }
    return "class " + std::to_string(c);
}

// "If AST <= 53.05 and ALT > 9.65 then Patient is Healthy"
inline std::string describe(const Path& p) {
    std::string out = "If ";
    if (p.conditions.empty()) out += "true";
    for (std::size_t i = 0; i < p.conditions.size(); ++i) {
        const auto& c = p.conditions[i];
        if (i) out += " and ";
        out += c.feature + (c.op == CmpOp::LessEqual ? " <= " : " > ") + rdf::format_double(c.threshold);
    }
    return out + " then " + category_label(p.category);
}

inline std::map<std::string, std::string> default_feature_properties() {
    std::map<std::string, std::string> m{{"Age", "hasAge"}, {"Sex", "hasSex"}};
    for (auto lab : lab_names) m[std::string(lab)] = "hasValue" + std::string(lab);
    return m;
}

inline std::map<int, std::string> default_class_heads() {
    return {{0, "isHealthy"}, {1, "isShowingSigns"}, {2, "isHepatitisCpatient"}, {3, "isFibrosisPatient"},
            {4, "isCirrhosisPatient"}};
}

// Patient(?x) ^ hasValueF(?x, ?f) ^ swrlb:op(?f, "t"^^xsd:float) ... -> head(?x, true).
// A feature tested twice on one path reuses its variable and property atom.
inline std::vector<rules::Rule> paths_to_rules(const std::vector<Path>& paths,
                                               const std::map<std::string, std::string>& feature_properties,
                                               const std::map<int, std::string>& class_heads,
                                               const std::string& name_prefix = "dt") {
    using namespace rules;
    std::vector<Rule> out;
    for (std::size_t i = 0; i < paths.size(); ++i) {
        const auto& p = paths[i];
        Rule r;
        r.name = name_prefix + std::to_string(i + 1);
        r.body.push_back(ClassAtom{"Patient", var("x")});
        std::vector<std::string> seen;
        for (const auto& c : p.conditions) {
            auto prop = feature_properties.find(c.feature);
            if (prop == feature_properties.end()) throw DataError("no data property mapped for feature " + c.feature);
            std::string v;
            for (char ch : c.feature) v += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
            if (std::find(seen.begin(), seen.end(), c.feature) == seen.end()) {
                r.body.push_back(PropertyAtom{prop->second, var("x"), var(v)});
                seen.push_back(c.feature);
            }
            auto op = c.op == CmpOp::LessEqual ? BuiltinOp::LessThanOrEqual : BuiltinOp::GreaterThan;
            r.body.push_back(BuiltinAtom{op, var(v), rdf::Literal(rdf::format_double(c.threshold), rdf::Datatype::Float)});
        }
        auto head = class_heads.find(p.category);
        if (head == class_heads.end()) throw DataError("no head property mapped for class " + std::to_string(p.category));
        r.head.push_back(PropertyAtom{head->second, var("x"), rdf::Literal::boolean(true)});
        out.push_back(std::move(r));
    }
    return out;
}

struct EvalMetrics {
    double accuracy = 0;
    double macro_precision = 0;
    double macro_recall = 0;
    double macro_f1 = 0;
    // Support-weighted averages; weighted recall always equals accuracy.
    double weighted_precision = 0;
    double weighted_recall = 0;
    double weighted_f1 = 0;
};

// Scores one prediction set. Macro averages run over all class_count
// classes; a class with no support and no predictions contributes 0.
inline EvalMetrics score(const std::vector<int>& truth, const std::vector<int>& predicted, int class_count) {
    EvalMetrics m;
    const auto k = static_cast<std::size_t>(class_count);
    std::vector<double> tp(k), fp(k), fn(k), support(k);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        auto t = static_cast<std::size_t>(truth[i]);
        auto p = static_cast<std::size_t>(predicted[i]);
        support[t] += 1;
        if (t == p) {
            ++correct;
            tp[t] += 1;
        } else {
            fp[p] += 1;
            fn[t] += 1;
        }
    }
    const double n = static_cast<double>(truth.size());
    m.accuracy = n > 0 ? static_cast<double>(correct) / n : 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        double prec = tp[c] + fp[c] > 0 ? tp[c] / (tp[c] + fp[c]) : 0.0;
        double rec = tp[c] + fn[c] > 0 ? tp[c] / (tp[c] + fn[c]) : 0.0;
        double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
        m.macro_precision += prec / static_cast<double>(k);
        m.macro_recall += rec / static_cast<double>(k);
        m.macro_f1 += f1 / static_cast<double>(k);
        if (n > 0) {
            m.weighted_precision += prec * support[c] / n;
            m.weighted_recall += rec * support[c] / n;
            m.weighted_f1 += f1 * support[c] / n;
        }
    }
    return m;
}

// Stratified fold assignment: each class is shuffled with the seed and
// dealt round-robin, continuing the rotation from the previous class.
inline std::vector<std::size_t> stratified_folds(const std::vector<int>& labels, int class_count, std::size_t k,
                                                 std::uint64_t seed) {
    std::vector<std::size_t> fold(labels.size());
    std::mt19937_64 rng(seed);
    std::size_t next = 0;
    for (int c = 0; c < class_count; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == c) members.push_back(i);
        std::shuffle(members.begin(), members.end(), rng);
        for (auto i : members) fold[i] = next++ % k;
    }
    return fold;
}

struct CrossValidation {
    EvalMetrics mean;
    std::vector<EvalMetrics> folds;
};

inline CrossValidation cross_validate(const Dataset& data, const TrainConfig& config, std::size_t k) {
    if (k < 2) throw DataError("cross-validation needs at least 2 folds");
    if (k > data.size()) throw DataError("more folds (" + std::to_string(k) + ") than records (" + std::to_string(data.size()) + ")");
    auto fold = stratified_folds(data.labels, data.class_count, k, config.random_seed);
    CrossValidation cv;
    for (std::size_t f = 0; f < k; ++f) {
        Dataset train;
        train.feature_names = data.feature_names;
        train.class_count = data.class_count;
        std::vector<std::size_t> test;
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (fold[i] == f) {
                test.push_back(i);
            } else {
                train.rows.push_back(data.rows[i]);
                train.labels.push_back(data.labels[i]);
            }
        }
        if (test.empty() || train.size() == 0) continue;
        Tree tree = fit(train, config);
        std::vector<int> truth, predicted;
        for (auto i : test) {
            truth.push_back(data.labels[i]);
            predicted.push_back(predict(tree, data.rows[i]));
        }
        cv.folds.push_back(score(truth, predicted, data.class_count));
    }
    const double n = static_cast<double>(cv.folds.size());
    for (const auto& m : cv.folds) {
        cv.mean.accuracy += m.accuracy / n;
        cv.mean.macro_precision += m.macro_precision / n;
        cv.mean.macro_recall += m.macro_recall / n;
        cv.mean.macro_f1 += m.macro_f1 / n;
        cv.mean.weighted_precision += m.weighted_precision / n;
        cv.mean.weighted_recall += m.weighted_recall / n;
        cv.mean.weighted_f1 += m.weighted_f1 / n;
    }
    return cv;
}

}  // namespace liverkg::dtree
