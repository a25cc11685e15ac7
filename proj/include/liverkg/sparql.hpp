#pragma once

#include <liverkg/error.hpp>
#include <liverkg/graph.hpp>
#include <liverkg/ntriples.hpp>
#include <liverkg/term.hpp>

#include <json.hpp>

#include <limits>

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

// SPARQL subset: PREFIX declarations, SELECT (vars or *), one basic graph
// pattern with ';' predicate lists and ',' object lists, numeric FILTERs
// (var op number, '&&' conjunctions), ORDER BY and LIMIT.

namespace liverkg::sparql {

struct Var {
    std::string name;
    friend bool operator==(const Var&, const Var&) = default;
};

using PatternTerm = std::variant<Var, rdf::Iri, rdf::Literal>;

struct TriplePattern {
    PatternTerm subject;
    PatternTerm predicate;
    PatternTerm object;
    friend bool operator==(const TriplePattern&, const TriplePattern&) = default;
};

enum class CmpOp { Lt, Le, Gt, Ge, Eq, Ne };

inline std::string_view op_text(CmpOp op) {
    switch (op) {
        case CmpOp::Lt: return "<";
        case CmpOp::Le: return "<=";
        case CmpOp::Gt: return ">";
        case CmpOp::Ge: return ">=";
        case CmpOp::Eq: return "=";
        case CmpOp::Ne: return "!=";
    }
    return "=";
}

inline bool compare(CmpOp op, double a, double b) {
    switch (op) {
        case CmpOp::Lt: return a < b;
        case CmpOp::Le: return a <= b;
        case CmpOp::Gt: return a > b;
        case CmpOp::Ge: return a >= b;
        case CmpOp::Eq: return a == b;
        case CmpOp::Ne: return a != b;
    }
    return false;
}

// Normalized to "?var op constant".
struct Filter {
    std::string var;
    CmpOp op;
    double value;
    friend bool operator==(const Filter&, const Filter&) = default;
};

enum class Direction { Asc, Desc };

struct OrderBy {
    std::string var;
    Direction direction = Direction::Asc;
};

struct Query {
    std::map<std::string, std::string> prefixes;
    std::vector<std::string> select;
    std::vector<TriplePattern> patterns;
    std::vector<Filter> filters;
    std::optional<OrderBy> order_by;
    std::optional<std::size_t> limit;
};

struct ResultSet {
    std::vector<std::string> vars;
    std::vector<std::vector<rdf::Term>> rows;

    const rdf::Term& at(std::size_t row, std::string_view var) const {
        for (std::size_t i = 0; i < vars.size(); ++i)
            if (vars[i] == var) return rows.at(row).at(i);
        throw NotFoundError("no result variable ?" + std::string(var));
    }
};

namespace detail {

class QueryParser {
public:
    explicit QueryParser(std::string_view text) : text_(text) {}

    Query parse() {
        Query q;
        skip();
        while (keyword("PREFIX")) {
            skip();
            auto start = pos_;
            std::string prefix;
            while (!at_end() && peek() != ':' && !std::isspace(static_cast<unsigned char>(peek()))) prefix += text_[pos_++];
            if (peek() != ':') fail("expected prefix name ending in ':'", start);
            ++pos_;
            skip();
            q.prefixes[prefix] = read_iriref().str();
            skip();
        }
        prefixes_ = &q.prefixes;
        if (!keyword("SELECT")) fail("expected SELECT", pos_);
        skip();
        std::vector<std::pair<std::string, std::size_t>> select_pos;
        bool star = false;
        if (peek() == '*') {
            ++pos_;
            star = true;
        } else {
            while (peek() == '?' || peek() == '$') {
                auto at = pos_;
                select_pos.emplace_back(read_var(), at);
                skip();
            }
            if (select_pos.empty()) fail("SELECT needs at least one variable or '*'", pos_);
        }
        skip();
        keyword("WHERE");
        skip();
        expect('{');
        parse_group(q);
        expect('}');
        skip();
        if (keyword("ORDER")) {
            skip();
            if (!keyword("BY")) fail("expected BY after ORDER", pos_);
            skip();
            OrderBy ob;
            auto at = pos_;
            bool asc = keyword("ASC");
            bool desc = !asc && keyword("DESC");
            if (asc || desc) {
                ob.direction = asc ? Direction::Asc : Direction::Desc;
                skip();
                expect('(');
                skip();
                at = pos_;
                ob.var = read_var();
                expect(')');
            } else {
                ob.var = read_var();
            }
            order_pos_ = at;
            q.order_by = ob;
            skip();
        }
        if (keyword("LIMIT")) {
            skip();
            auto start = pos_;
            std::string digits;
            while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) digits += text_[pos_++];
            if (digits.empty()) fail("expected integer after LIMIT", start);
            q.limit = std::stoull(digits);
            skip();
        }
        if (!at_end()) fail("unexpected trailing text", pos_);

        // Validation: every referenced variable must occur in a pattern.
        std::vector<std::string> pattern_vars;
        auto note = [&](const PatternTerm& t) {
            if (auto* v = std::get_if<Var>(&t))
                if (std::find(pattern_vars.begin(), pattern_vars.end(), v->name) == pattern_vars.end())
                    pattern_vars.push_back(v->name);
        };
        for (const auto& p : q.patterns) {
            note(p.subject);
            note(p.predicate);
            note(p.object);
        }
        auto known = [&](const std::string& v) {
            return std::find(pattern_vars.begin(), pattern_vars.end(), v) != pattern_vars.end();
        };
        if (star) {
            q.select = pattern_vars;
        } else {
            for (const auto& [v, at] : select_pos) {
                if (!known(v)) fail("SELECT variable ?" + v + " does not occur in the graph pattern", at);
                q.select.push_back(v);
            }
        }
        for (std::size_t i = 0; i < q.filters.size(); ++i)
            if (!known(q.filters[i].var))
                fail("FILTER variable ?" + q.filters[i].var + " does not occur in the graph pattern", filter_pos_[i]);
        if (q.order_by && !known(q.order_by->var))
            fail("ORDER BY variable ?" + q.order_by->var + " does not occur in the graph pattern", order_pos_);
        return q;
    }

private:
    [[noreturn]] void fail(const std::string& message, std::size_t at) const {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i < at && i < text_.size(); ++i) {
            if (text_[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError(message, line, col);
    }

    bool at_end() const { return pos_ >= text_.size(); }
    char peek() const { return at_end() ? '\0' : text_[pos_]; }

    void skip() {
        while (!at_end()) {
            if (std::isspace(static_cast<unsigned char>(peek()))) {
                ++pos_;
            } else if (peek() == '#') {
                while (!at_end() && peek() != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    void expect(char c) {
        skip();
        if (peek() != c) fail(std::string("expected '") + c + "'", pos_);
        ++pos_;
    }

    // Case-insensitive keyword followed by a non-identifier character.
    bool keyword(std::string_view kw) {
        if (pos_ + kw.size() > text_.size()) return false;
        for (std::size_t i = 0; i < kw.size(); ++i)
            if (std::toupper(static_cast<unsigned char>(text_[pos_ + i])) != kw[i]) return false;
        auto next = pos_ + kw.size();
        if (next < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[next])) || text_[next] == '_'))
            return false;
        pos_ = next;
        return true;
    }

    std::string read_var() {
        if (peek() != '?' && peek() != '$') fail("expected variable", pos_);
        ++pos_;
        std::string name;
        while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) name += text_[pos_++];
        if (name.empty()) fail("empty variable name", pos_);
        return name;
    }

    rdf::Iri read_iriref() {
        auto start = pos_;
        if (peek() != '<') fail("expected IRI", start);
        auto close = text_.find('>', pos_);
        if (close == std::string_view::npos) fail("unterminated IRI", start);
        std::string value(text_.substr(pos_ + 1, close - pos_ - 1));
        if (auto problem = rdf::Iri::validate(value)) fail("invalid IRI: " + *problem, start);
        pos_ = close + 1;
        return rdf::Iri(value);
    }

    bool looks_like_iriref() const {
        if (peek() != '<') return false;
        for (auto i = pos_ + 1; i < text_.size(); ++i) {
            char c = text_[i];
            if (c == '>') return true;
            if (std::isspace(static_cast<unsigned char>(c)) || c == '<' || c == '=') return false;
        }
        return false;
    }

    rdf::Iri read_pname() {
        auto start = pos_;
        std::string prefix;
        while (!at_end() && peek() != ':' && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-'))
            prefix += text_[pos_++];
        if (peek() != ':') fail("expected prefixed name", start);
        ++pos_;
        std::string local;
        while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-' ||
                             (peek() == '.' && pos_ + 1 < text_.size() &&
                              std::isalnum(static_cast<unsigned char>(text_[pos_ + 1])))))
            local += text_[pos_++];
        auto it = prefixes_->find(prefix);
        if (it == prefixes_->end()) fail("undeclared prefix '" + prefix + ":'", start);
        return rdf::Iri(it->second + local);
    }

    PatternTerm read_term(bool allow_literal) {
        skip();
        auto start = pos_;
        char c = peek();
        if (c == '?' || c == '$') return Var{read_var()};
        if (c == '<') return read_iriref();
        if (c == '"') {
            if (!allow_literal) fail("literal not allowed here", start);
            return read_literal();
        }
        if (c == '-' || c == '+' || std::isdigit(static_cast<unsigned char>(c))) {
            if (!allow_literal) fail("literal not allowed here", start);
            auto lex = read_number_text();
            auto dt = rdf::is_integer_lexical(lex) ? rdf::Datatype::Integer : rdf::Datatype::Decimal;
            return rdf::Literal(lex, dt);
        }
        if (keyword("TRUE")) return rdf::Literal::boolean(true);
        if (keyword("FALSE")) return rdf::Literal::boolean(false);
        return read_pname();
    }

    rdf::Literal read_literal() {
        auto start = pos_;
        ++pos_;
        std::string lex;
        while (true) {
            if (at_end()) fail("unterminated string literal", start);
            char c = peek();
            if (c == '"') break;
            if (c == '\\') {
                ++pos_;
                char e = peek();
                if (e == 'n') lex += '\n';
                else if (e == 't') lex += '\t';
                else if (e == '"' || e == '\\') lex += e;
                else fail("bad escape in string literal", pos_);
                ++pos_;
                continue;
            }
            lex += c;
            ++pos_;
        }
        ++pos_;
        auto dt = rdf::Datatype::String;
        if (text_.substr(pos_, 2) == "^^") {
            pos_ += 2;
            auto at = pos_;
            rdf::Iri dt_iri = peek() == '<' ? read_iriref() : read_pname();
            auto known = rdf::datatype_from_iri(dt_iri.str());
            if (!known) fail("unsupported datatype " + dt_iri.str(), at);
            dt = *known;
        }
        try {
            return rdf::Literal(lex, dt);
        } catch (const DataError& e) {
            fail(e.what(), start);
        }
    }

    std::string read_number_text() {
        std::string out;
        if (peek() == '-' || peek() == '+') out += text_[pos_++];
        while (!at_end() && (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.' || peek() == 'e' ||
                             peek() == 'E')) {
            if (peek() == '.' && !(pos_ + 1 < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_ + 1]))))
                break;
            out += text_[pos_++];
        }
        return out;
    }

    void parse_group(Query& q) {
        while (true) {
            skip();
            if (peek() == '}' || at_end()) return;
            if (peek() == '.') {
                ++pos_;
                continue;
            }
            if (keyword("FILTER")) {
                parse_filter(q);
                continue;
            }
            parse_triples(q);
        }
    }

    void parse_triples(Query& q) {
        auto subject = read_term(false);
        while (true) {
            skip();
            PatternTerm predicate;
            if (peek() == 'a' && pos_ + 1 < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_ + 1]))) {
                ++pos_;
                predicate = rdf::Iri(std::string(rdf::rdf_ns::type));
            } else {
                predicate = read_term(false);
            }
            while (true) {
                auto object = read_term(true);
                q.patterns.push_back({subject, predicate, object});
                skip();
                if (peek() != ',') break;
                ++pos_;
            }
            skip();
            if (peek() != ';') break;
            ++pos_;
            skip();
            if (peek() == '.' || peek() == '}') break;  // dangling ';'
        }
    }

    CmpOp read_op() {
        skip();
        auto at = pos_;
        auto two = text_.substr(pos_, 2);
        if (two == "<=") { pos_ += 2; return CmpOp::Le; }
        if (two == ">=") { pos_ += 2; return CmpOp::Ge; }
        if (two == "!=") { pos_ += 2; return CmpOp::Ne; }
        if (peek() == '<') { ++pos_; return CmpOp::Lt; }
        if (peek() == '>') { ++pos_; return CmpOp::Gt; }
        if (peek() == '=') { ++pos_; return CmpOp::Eq; }
        fail("unknown operator", at);
    }

    static CmpOp flip(CmpOp op) {
        switch (op) {
            case CmpOp::Lt: return CmpOp::Gt;
            case CmpOp::Le: return CmpOp::Ge;
            case CmpOp::Gt: return CmpOp::Lt;
            case CmpOp::Ge: return CmpOp::Le;
            default: return op;
        }
    }

    double read_constant() {
        skip();
        auto at = pos_;
        if (peek() == '"') {
            auto lit = read_literal();
            if (!lit.number()) fail("FILTER constant must be numeric", at);
            return *lit.number();
        }
        auto lex = read_number_text();
        auto v = rdf::parse_number(lex);
        if (!v) fail("FILTER constant must be numeric", at);
        return *v;
    }

    void parse_filter(Query& q) {
        expect('(');
        while (true) {
            skip();
            auto at = pos_;
            Filter f;
            if (peek() == '?' || peek() == '$') {
                f.var = read_var();
                f.op = read_op();
                f.value = read_constant();
            } else {
                f.value = read_constant();
                f.op = flip(read_op());
                skip();
                f.var = read_var();
            }
            q.filters.push_back(f);
            filter_pos_.push_back(at);
            skip();
            if (text_.substr(pos_, 2) != "&&") break;
            pos_ += 2;
        }
        expect(')');
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    const std::map<std::string, std::string>* prefixes_ = nullptr;
    std::vector<std::size_t> filter_pos_;
    std::size_t order_pos_ = 0;
};

using Solution = std::map<std::string, rdf::Term>;

class Evaluator {
public:
    Evaluator(const Query& q, const rdf::Graph& g) : q_(q), g_(g) {}

    std::vector<Solution> run() {
        order_patterns();
        std::vector<Solution> out;
        Solution s;
        solve(0, s, out);
        return out;
    }

private:
    std::optional<rdf::Term> bound(const PatternTerm& t, const Solution& s) const {
        if (auto* v = std::get_if<Var>(&t)) {
            auto it = s.find(v->name);
            if (it == s.end()) return std::nullopt;
            return it->second;
        }
        if (auto* iri = std::get_if<rdf::Iri>(&t)) return rdf::Term{*iri};
        return rdf::Term{std::get<rdf::Literal>(t)};
    }

    static std::optional<rdf::Iri> as_iri(const std::optional<rdf::Term>& t, bool& impossible) {
        if (!t) return std::nullopt;
        if (auto* iri = std::get_if<rdf::Iri>(&*t)) return *iri;
        impossible = true;
        return std::nullopt;
    }

    std::size_t estimate(const TriplePattern& p, const std::set<std::string>& bound_vars) const {
        Solution none;
        bool impossible = false;
        auto s = as_iri(bound(p.subject, none), impossible);
        auto pr = as_iri(bound(p.predicate, none), impossible);
        auto o = bound(p.object, none);
        if (impossible) return 0;
        std::size_t n = g_.count(s, pr, o);
        auto is_bound = [&](const PatternTerm& t) {
            auto* v = std::get_if<Var>(&t);
            return v && bound_vars.count(v->name);
        };
        // A bound subject or object makes the pattern a lookup.
        if (is_bound(p.subject)) n = std::min<std::size_t>(n, 1);
        else if (is_bound(p.object)) n = std::max<std::size_t>(n / 16, 1);
        return n;
    }

    // Left-deep, most selective pattern first, preferring patterns that
    // join with what is already bound.
    void order_patterns() {
        std::vector<const TriplePattern*> remaining;
        for (const auto& p : q_.patterns) remaining.push_back(&p);
        std::set<std::string> bound_vars;
        while (!remaining.empty()) {
            std::size_t best = 0;
            std::size_t best_cost = std::numeric_limits<std::size_t>::max();
            bool best_joins = false;
            for (std::size_t i = 0; i < remaining.size(); ++i) {
                bool joins = bound_vars.empty();
                for (const auto* t : {&remaining[i]->subject, &remaining[i]->predicate, &remaining[i]->object})
                    if (auto* v = std::get_if<Var>(t); v && bound_vars.count(v->name)) joins = true;
                auto cost = estimate(*remaining[i], bound_vars);
                if ((joins && !best_joins) || (joins == best_joins && cost < best_cost)) {
                    best = i;
                    best_cost = cost;
                    best_joins = joins;
                }
            }
            const auto* chosen = remaining[best];
            for (const auto* t : {&chosen->subject, &chosen->predicate, &chosen->object})
                if (auto* v = std::get_if<Var>(t)) bound_vars.insert(v->name);
            plan_.push_back(chosen);
            remaining.erase(remaining.begin() + static_cast<long>(best));
        }
    }

    bool filters_hold(const Solution& s, const std::string& just_bound) const {
        for (const auto& f : q_.filters) {
            if (f.var != just_bound) continue;
            const auto& term = s.at(f.var);
            auto v = rdf::numeric_value(term);
            if (!v)
                throw EvaluationError("type error: FILTER (?" + f.var + " " + std::string(op_text(f.op)) +
                                      " ...) applied to non-numeric binding ?" + f.var + " = " + rdf::to_ntriples(term));
            if (!compare(f.op, *v, f.value)) return false;
        }
        return true;
    }

    static bool same(const rdf::Term& a, const rdf::Term& b) { return a == b; }

    void solve(std::size_t i, Solution& s, std::vector<Solution>& out) const {
        if (i == plan_.size()) {
            out.push_back(s);
            return;
        }
        const auto& p = *plan_[i];
        bool impossible = false;
        auto sb = as_iri(bound(p.subject, s), impossible);
        auto pb = as_iri(bound(p.predicate, s), impossible);
        auto ob = bound(p.object, s);
        if (impossible) return;
        for (const auto& t : g_.match(sb, pb, ob)) {
            std::vector<std::string> added;
            bool ok = true;
            auto bind = [&](const PatternTerm& pt, const rdf::Term& value) {
                if (!ok) return;
                auto* v = std::get_if<Var>(&pt);
                if (!v) return;
                auto it = s.find(v->name);
                if (it != s.end()) {
                    ok = same(it->second, value);
                    return;
                }
                s.emplace(v->name, value);
                added.push_back(v->name);
                ok = filters_hold(s, v->name);
            };
            bind(p.subject, rdf::Term{t.subject});
            bind(p.predicate, rdf::Term{t.predicate});
            bind(p.object, t.object);
            if (ok) solve(i + 1, s, out);
            for (const auto& name : added) s.erase(name);
        }
    }

    const Query& q_;
    const rdf::Graph& g_;
    std::vector<const TriplePattern*> plan_;
};

// Numbers before non-numbers; numbers by value, others by N-Triples text.
inline bool order_less(const rdf::Term& a, const rdf::Term& b) {
    auto x = rdf::numeric_value(a);
    auto y = rdf::numeric_value(b);
    if (x && y) return *x < *y;
    if (x != y && (x || y)) return x.has_value();
    return rdf::to_ntriples(a) < rdf::to_ntriples(b);
}

}  // namespace detail

inline Query parse_query(std::string_view text) { return detail::QueryParser(text).parse(); }

inline ResultSet evaluate(const Query& q, const rdf::Graph& g) {
    auto solutions = detail::Evaluator(q, g).run();
    if (q.order_by) {
        const auto& key = q.order_by->var;
        bool desc = q.order_by->direction == Direction::Desc;
        std::stable_sort(solutions.begin(), solutions.end(), [&](const auto& a, const auto& b) {
            return desc ? detail::order_less(b.at(key), a.at(key)) : detail::order_less(a.at(key), b.at(key));
        });
    } else if (!q.select.empty()) {
        const auto& key = q.select.front();
        std::stable_sort(solutions.begin(), solutions.end(),
                         [&](const auto& a, const auto& b) { return a.at(key) < b.at(key); });
    }
    ResultSet rs;
    rs.vars = q.select;
    for (const auto& s : solutions) {
        if (q.limit && rs.rows.size() >= *q.limit) break;
        std::vector<rdf::Term> row;
        row.reserve(q.select.size());
        for (const auto& v : q.select) row.push_back(s.at(v));
        rs.rows.push_back(std::move(row));
    }
    return rs;
}

inline ResultSet query(std::string_view text, const rdf::Graph& g) { return evaluate(parse_query(text), g); }

inline std::string to_tsv(const ResultSet& rs) {
    std::string out;
    for (std::size_t i = 0; i < rs.vars.size(); ++i) {
        if (i) out += '\t';
        out += '?' + rs.vars[i];
    }
    out += '\n';
    for (const auto& row : rs.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += '\t';
            out += rdf::to_ntriples(row[i]);
        }
        out += '\n';
    }
    return out;
}

// SPARQL 1.1 JSON results layout.
inline nlohmann::json to_json(const ResultSet& rs) {
    nlohmann::json bindings = nlohmann::json::array();
    for (const auto& row : rs.rows) {
        nlohmann::json b = nlohmann::json::object();
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (auto* iri = std::get_if<rdf::Iri>(&row[i])) {
                b[rs.vars[i]] = {{"type", "uri"}, {"value", iri->str()}};
            } else {
                const auto& lit = std::get<rdf::Literal>(row[i]);
                nlohmann::json cell = {{"type", "literal"}, {"value", lit.lexical()}};
                if (lit.datatype() != rdf::Datatype::String) cell["datatype"] = std::string(rdf::datatype_iri(lit.datatype()));
                b[rs.vars[i]] = cell;
            }
        }
        bindings.push_back(std::move(b));
    }
    return {{"head", {{"vars", rs.vars}}}, {"results", {{"bindings", bindings}}}};
}

}  // namespace liverkg::sparql
