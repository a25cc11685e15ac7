#pragma once

#include <liverkg/error.hpp>
#include <liverkg/graph.hpp>
#include <liverkg/ntriples.hpp>
#include <liverkg/rules.hpp>
#include <liverkg/vocabulary.hpp>

#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace liverkg::rules {

using Binding = std::map<std::string, rdf::Term>;

// A builtin comparison as it held for one binding.
struct Comparison {
    BuiltinOp op;
    rdf::Term left;
    rdf::Term right;
    friend bool operator==(const Comparison&, const Comparison&) = default;
};

struct ProofStep {
    rdf::Triple derived;
    std::string rule;
    Binding bindings;
    std::vector<rdf::Triple> premises;  // ground body atoms, as found in the graph
    std::vector<Comparison> comparisons;
};

struct InferenceResult {
    rdf::Graph derived;
    std::vector<ProofStep> proofs;  // first proof of each derived triple, in derivation order
    std::size_t iterations = 0;

    const ProofStep* proof_of(const rdf::Triple& t) const {
        for (const auto& p : proofs)
            if (p.derived == t) return &p;
        return nullptr;
    }
};

namespace detail {

inline const rdf::Iri& rdf_type() {
    static const rdf::Iri type{std::string(rdf::rdf_ns::type)};
    return type;
}

// Numeric literals agree by value across datatypes; everything else by identity.
inline bool same_value(const rdf::Term& a, const rdf::Term& b) {
    auto x = rdf::numeric_value(a);
    auto y = rdf::numeric_value(b);
    if (x && y) return *x == *y;
    return a == b;
}

class BodyEvaluator {
public:
    static constexpr std::size_t no_delta = std::numeric_limits<std::size_t>::max();

    BodyEvaluator(const rdf::Graph& full, const std::vector<Atom>& body, const Vocabulary& vocab,
                  const rdf::Graph* delta = nullptr, std::size_t delta_atom = no_delta)
        : full_(full), delta_(delta), delta_atom_(delta_atom), vocab_(vocab) {
        for (std::size_t i = 0; i < body.size(); ++i) {
            if (auto* b = std::get_if<BuiltinAtom>(&body[i])) builtins_.push_back(b);
            else {
                matchers_.push_back(&body[i]);
                matcher_body_index_.push_back(i);
            }
        }
    }

    std::vector<Binding> run(const Binding& seed) {
        std::vector<std::size_t> ready(builtins_.size(), 0);
        std::set<std::string> bound;
        for (const auto& [k, v] : seed) bound.insert(k);
        level_.assign(builtins_.size(), no_delta);
        auto assign_ready = [&](std::size_t level) {
            for (std::size_t b = 0; b < builtins_.size(); ++b) {
                if (level_[b] != no_delta) continue;
                std::set<std::string> vs;
                collect_vars(Atom{*builtins_[b]}, vs);
                bool all = true;
                for (const auto& v : vs) all = all && bound.count(v);
                if (all) level_[b] = level;
            }
        };
        assign_ready(0);
        for (std::size_t m = 0; m < matchers_.size(); ++m) {
            collect_vars(*matchers_[m], bound);
            assign_ready(m + 1);
        }
        for (std::size_t b = 0; b < builtins_.size(); ++b)
            if (level_[b] == no_delta)
                throw EvaluationError("builtin " + serialize_atom(Atom{*builtins_[b]}) + " has unbound arguments");

        std::vector<Binding> out;
        Binding binding = seed;
        if (check_builtins(0, binding)) solve(0, binding, out);
        return out;
    }

    // Ground premises and comparisons for a complete binding.
    void ground(const std::vector<Atom>& body, const Binding& b, std::vector<rdf::Triple>& premises,
                std::vector<Comparison>& comparisons) const {
        for (const auto& atom : body) {
            if (auto* bi = std::get_if<BuiltinAtom>(&atom)) {
                comparisons.push_back({bi->op, resolve(bi->left, b).value(), resolve(bi->right, b).value()});
                continue;
            }
            if (auto* c = std::get_if<ClassAtom>(&atom)) {
                auto s = resolve(c->arg, b);
                premises.push_back({std::get<rdf::Iri>(*s), rdf_type(), vocab_.resolve(c->cls)});
                continue;
            }
            const auto& p = std::get<PropertyAtom>(atom);
            auto s = std::get<rdf::Iri>(*resolve(p.subject, b));
            auto pred = vocab_.resolve(p.property);
            auto o = *resolve(p.object, b);
            rdf::Triple t{s, pred, o};
            for (const auto& cand : full_.match(s, pred))
                if (same_value(cand.object, o)) {
                    t = cand;
                    break;
                }
            premises.push_back(std::move(t));
        }
    }

private:
    std::optional<rdf::Term> resolve(const Arg& a, const Binding& b) const {
        if (auto* v = std::get_if<Variable>(&a)) {
            auto it = b.find(v->name);
            if (it == b.end()) return std::nullopt;
            return it->second;
        }
        if (auto* s = std::get_if<Symbol>(&a)) return rdf::Term{vocab_.resolve(s->name)};
        return rdf::Term{std::get<rdf::Literal>(a)};
    }

    bool check_builtins(std::size_t level, const Binding& b) const {
        for (std::size_t i = 0; i < builtins_.size(); ++i) {
            if (level_[i] != level) continue;
            const auto& atom = *builtins_[i];
            auto l = resolve(atom.left, b);
            auto r = resolve(atom.right, b);
            auto lv = rdf::numeric_value(*l);
            auto rv = rdf::numeric_value(*r);
            if (!lv || !rv)
                throw EvaluationError("builtin " + serialize_atom(Atom{atom}) + " applied to non-numeric value " +
                                      rdf::to_ntriples(!lv ? *l : *r));
            if (!apply_builtin(atom.op, *lv, *rv)) return false;
        }
        return true;
    }

    const rdf::Graph& source_for(std::size_t matcher) const {
        if (delta_ && matcher_body_index_[matcher] == delta_atom_) return *delta_;
        return full_;
    }

    // Binds `arg` to `value`; false when it conflicts with an existing binding.
    static bool unify(const Arg& arg, const rdf::Term& value, Binding& b, std::vector<std::string>& added) {
        if (auto* v = std::get_if<Variable>(&arg)) {
            auto it = b.find(v->name);
            if (it != b.end()) return same_value(it->second, value);
            b.emplace(v->name, value);
            added.push_back(v->name);
            return true;
        }
        return true;
    }

    void solve(std::size_t m, Binding& b, std::vector<Binding>& out) const {
        if (m == matchers_.size()) {
            out.push_back(b);
            return;
        }
        const auto& g = source_for(m);
        const Atom& atom = *matchers_[m];
        auto step = [&](const Arg& s_arg, const rdf::Term& s_val, const Arg* o_arg, const rdf::Term* o_val) {
            std::vector<std::string> added;
            bool ok = unify(s_arg, s_val, b, added);
            if (ok && o_arg) ok = unify(*o_arg, *o_val, b, added);
            if (ok && check_builtins(m + 1, b)) solve(m + 1, b, out);
            for (const auto& name : added) b.erase(name);
        };

        if (auto* c = std::get_if<ClassAtom>(&atom)) {
            auto cls = vocab_.resolve(c->cls);
            auto s = resolve(c->arg, b);
            if (s) {
                auto* iri = std::get_if<rdf::Iri>(&*s);
                if (iri && g.contains({*iri, rdf_type(), cls})) step(c->arg, *s, nullptr, nullptr);
                return;
            }
            for (const auto& t : g.match(std::nullopt, rdf_type(), rdf::Term{cls})) step(c->arg, t.subject, nullptr, nullptr);
            return;
        }

        const auto& p = std::get<PropertyAtom>(atom);
        auto pred = vocab_.resolve(p.property);
        auto s = resolve(p.subject, b);
        std::optional<rdf::Iri> s_iri;
        if (s) {
            auto* iri = std::get_if<rdf::Iri>(&*s);
            if (!iri) return;
            s_iri = *iri;
        }
        auto o = resolve(p.object, b);
        std::optional<rdf::Term> o_exact;
        if (o && !rdf::numeric_value(*o)) o_exact = *o;
        for (const auto& t : g.match(s_iri, pred, o_exact)) {
            if (o && !same_value(t.object, *o)) continue;
            rdf::Term subj{t.subject};
            step(p.subject, subj, &p.object, &t.object);
        }
    }

    const rdf::Graph& full_;
    const rdf::Graph* delta_;
    std::size_t delta_atom_;
    const Vocabulary& vocab_;
    std::vector<const BuiltinAtom*> builtins_;
    std::vector<const Atom*> matchers_;
    std::vector<std::size_t> matcher_body_index_;
    std::vector<std::size_t> level_;
};

inline std::optional<rdf::Triple> instantiate(const Atom& atom, const Binding& b, const Vocabulary& vocab) {
    auto resolve = [&](const Arg& a) -> std::optional<rdf::Term> {
        if (auto* v = std::get_if<Variable>(&a)) {
            auto it = b.find(v->name);
            if (it == b.end()) return std::nullopt;
            return it->second;
        }
        if (auto* s = std::get_if<Symbol>(&a)) return rdf::Term{vocab.resolve(s->name)};
        return rdf::Term{std::get<rdf::Literal>(a)};
    };
    if (auto* c = std::get_if<ClassAtom>(&atom)) {
        auto s = resolve(c->arg);
        if (!s || !rdf::is_iri(*s)) return std::nullopt;
        return rdf::Triple{std::get<rdf::Iri>(*s), rdf_type(), vocab.resolve(c->cls)};
    }
    if (auto* p = std::get_if<PropertyAtom>(&atom)) {
        auto s = resolve(p->subject);
        auto o = resolve(p->object);
        if (!s || !o || !rdf::is_iri(*s)) return std::nullopt;
        return rdf::Triple{std::get<rdf::Iri>(*s), vocab.resolve(p->property), *o};
    }
    return std::nullopt;
}

}  // namespace detail

// Every complete assignment under which all body atoms hold. Class atoms
// read rdf:type triples, property atoms read property triples (numeric
// objects compared by value), builtins compare numbers once bound.
inline std::vector<Binding> evaluate_body(const rdf::Graph& graph, const std::vector<Atom>& body,
                                          const Binding& seed = {}, const Vocabulary& vocab = Vocabulary{}) {
    return detail::BodyEvaluator(graph, body, vocab).run(seed);
}

// Semi-naive forward chaining to fixpoint. After the first round, a rule
// is only re-evaluated with one body atom drawn from the previous round's
// new facts, so no derivation is rediscovered from old facts alone.
inline InferenceResult infer(const rdf::Graph& graph, const std::vector<Rule>& rules,
                             const Vocabulary& vocab = Vocabulary{}) {
    InferenceResult result;
    rdf::Graph working = graph;
    rdf::Graph delta;
    bool first = true;
    while (true) {
        ++result.iterations;
        rdf::Graph fresh;
        for (const auto& rule : rules) {
            std::set<Binding> bindings;
            if (first) {
                for (auto& b : detail::BodyEvaluator(working, rule.body, vocab).run({})) bindings.insert(std::move(b));
            } else {
                for (std::size_t k = 0; k < rule.body.size(); ++k) {
                    if (std::holds_alternative<BuiltinAtom>(rule.body[k])) continue;
                    for (auto& b : detail::BodyEvaluator(working, rule.body, vocab, &delta, k).run({}))
                        bindings.insert(std::move(b));
                }
            }
            if (bindings.empty()) continue;
            detail::BodyEvaluator grounder(working, rule.body, vocab);
            for (const auto& b : bindings) {
                for (const auto& head : rule.head) {
                    auto t = detail::instantiate(head, b, vocab);
                    if (!t || working.contains(*t) || fresh.contains(*t)) continue;
                    fresh.insert(*t);
                    ProofStep step{*t, rule.name, b, {}, {}};
                    grounder.ground(rule.body, b, step.premises, step.comparisons);
                    result.proofs.push_back(std::move(step));
                }
            }
        }
        if (fresh.empty()) break;
        working.insert_all(fresh.triples());
        result.derived.insert_all(fresh.triples());
        delta = std::move(fresh);
        first = false;
    }
    return result;
}

struct Explanation {
    ProofStep step;
    std::vector<Explanation> supports;  // explanations of premises that were themselves derived
};

inline Explanation explain(const InferenceResult& result, const rdf::Triple& derived) {
    const ProofStep* step = result.proof_of(derived);
    if (!step) throw NotFoundError("triple was not derived: " + rdf::to_ntriples(derived));
    Explanation node{*step, {}};
    for (const auto& premise : step->premises)
        if (result.derived.contains(premise)) node.supports.push_back(explain(result, premise));
    return node;
}

inline std::size_t depth(const Explanation& e) {
    std::size_t d = 0;
    for (const auto& s : e.supports) d = std::max(d, depth(s));
    return d + 1;
}

inline std::string display_term(const rdf::Term& t, const Vocabulary& vocab) {
    if (auto* iri = std::get_if<rdf::Iri>(&t)) return vocab.local_name(*iri);
    return std::get<rdf::Literal>(t).lexical();
}

inline std::string display_triple(const rdf::Triple& t, const Vocabulary& vocab) {
    if (t.predicate == detail::rdf_type())
        return display_term(t.object, vocab) + "(" + display_term(t.subject, vocab) + ")";
    return vocab.local_name(t.predicate) + "(" + display_term(t.subject, vocab) + ", " + display_term(t.object, vocab) + ")";
}

inline std::string display_comparison(const Comparison& c, const Vocabulary& vocab) {
    return display_term(c.left, vocab) + " " + std::string(builtin_symbol(c.op)) + " " + display_term(c.right, vocab);
}

inline void render(const Explanation& e, const Vocabulary& vocab, std::string& out, std::size_t indent = 0) {
    std::string pad(indent * 2, ' ');
    out += pad + display_triple(e.step.derived, vocab) + " by rule " + e.step.rule + "\n";
    if (!e.step.bindings.empty()) {
        out += pad + "  bindings:";
        for (const auto& [k, v] : e.step.bindings) out += " ?" + k + "=" + display_term(v, vocab);
        out += "\n";
    }
    for (const auto& c : e.step.comparisons) out += pad + "  satisfied: " + display_comparison(c, vocab) + "\n";
    for (const auto& s : e.supports) render(s, vocab, out, indent + 1);
}

inline std::string render(const Explanation& e, const Vocabulary& vocab) {
    std::string out;
    render(e, vocab, out);
    return out;
}

}  // namespace liverkg::rules
