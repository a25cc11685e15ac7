#pragma once

#include <liverkg/error.hpp>
#include <liverkg/term.hpp>

#include <algorithm>
#include <cctype>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

// SWRL-lite rule language:
//
//   rule  := [name ':' ws] atoms '->' atoms
//   atoms := atom ('^' atom)*
//   atom  := Name '(' arg ')'                 class atom
//          | name '(' arg ',' arg ')'         property atom
//          | 'swrlb:' op '(' arg ',' arg ')'  numeric comparison
//   arg   := '?' ident | '"' lex '"' ['^^xsd:' type] | number | true | false | bareword
//
// Barewords (HepatitisA, every4Weeks) are symbolic constants that the
// reasoner maps to IRIs through a Vocabulary.

namespace liverkg::rules {

struct Variable {
    std::string name;  // without the leading '?'
    friend bool operator==(const Variable&, const Variable&) = default;
};

struct Symbol {
    std::string name;
    friend bool operator==(const Symbol&, const Symbol&) = default;
};

using Arg = std::variant<Variable, rdf::Literal, Symbol>;

enum class BuiltinOp { LessThan, LessThanOrEqual, GreaterThan, GreaterThanOrEqual, Equal };

inline std::string_view builtin_name(BuiltinOp op) {
    switch (op) {
        case BuiltinOp::LessThan: return "lessThan";
        case BuiltinOp::LessThanOrEqual: return "lessThanOrEqualTo";
        case BuiltinOp::GreaterThan: return "greaterThan";
        case BuiltinOp::GreaterThanOrEqual: return "greaterThanOrEqualTo";
        case BuiltinOp::Equal: return "equal";
    }
    return "equal";
}

inline std::string_view builtin_symbol(BuiltinOp op) {
    switch (op) {
        case BuiltinOp::LessThan: return "<";
        case BuiltinOp::LessThanOrEqual: return "<=";
        case BuiltinOp::GreaterThan: return ">";
        case BuiltinOp::GreaterThanOrEqual: return ">=";
        case BuiltinOp::Equal: return "=";
    }
    return "=";
}

inline bool apply_builtin(BuiltinOp op, double a, double b) {
    switch (op) {
        case BuiltinOp::LessThan: return a < b;
        case BuiltinOp::LessThanOrEqual: return a <= b;
        case BuiltinOp::GreaterThan: return a > b;
        case BuiltinOp::GreaterThanOrEqual: return a >= b;
        case BuiltinOp::Equal: return a == b;
    }
    return false;
}

struct ClassAtom {
    std::string cls;
    Arg arg;
    friend bool operator==(const ClassAtom&, const ClassAtom&) = default;
};

struct PropertyAtom {
    std::string property;
    Arg subject;
    Arg object;
    friend bool operator==(const PropertyAtom&, const PropertyAtom&) = default;
};

struct BuiltinAtom {
    BuiltinOp op;
    Arg left;
    Arg right;
    friend bool operator==(const BuiltinAtom&, const BuiltinAtom&) = default;
};

using Atom = std::variant<ClassAtom, PropertyAtom, BuiltinAtom>;

struct Rule {
    std::string name;
    std::vector<Atom> body;
    std::vector<Atom> head;
    friend bool operator==(const Rule&, const Rule&) = default;
};

inline Arg var(std::string name) { return Variable{std::move(name)}; }
inline Arg sym(std::string name) { return Symbol{std::move(name)}; }

inline void collect_vars(const Arg& a, std::set<std::string>& out) {
    if (auto* v = std::get_if<Variable>(&a)) out.insert(v->name);
}

inline void collect_vars(const Atom& atom, std::set<std::string>& out) {
    std::visit(
        [&](const auto& a) {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, ClassAtom>) {
                collect_vars(a.arg, out);
            } else if constexpr (std::is_same_v<T, PropertyAtom>) {
                collect_vars(a.subject, out);
                collect_vars(a.object, out);
            } else {
                collect_vars(a.left, out);
                collect_vars(a.right, out);
            }
        },
        atom);
}

// Throws DataError when the rule breaks a structural invariant: empty
// body or head, builtin in the head, head variable not bound by the body,
// or builtin variable not bound by a non-builtin body atom.
inline void validate(const Rule& r) {
    if (r.body.empty()) throw DataError("rule " + r.name + ": empty body");
    if (r.head.empty()) throw DataError("rule " + r.name + ": empty head");
    std::set<std::string> bound;
    for (const auto& a : r.body)
        if (!std::holds_alternative<BuiltinAtom>(a)) collect_vars(a, bound);
    for (const auto& a : r.body) {
        if (!std::holds_alternative<BuiltinAtom>(a)) continue;
        std::set<std::string> vs;
        collect_vars(a, vs);
        for (const auto& v : vs)
            if (!bound.count(v)) throw DataError("rule " + r.name + ": builtin variable ?" + v + " is never bound");
    }
    for (const auto& a : r.head) {
        if (std::holds_alternative<BuiltinAtom>(a)) throw DataError("rule " + r.name + ": builtin in head");
        std::set<std::string> vs;
        collect_vars(a, vs);
        for (const auto& v : vs)
            if (!bound.count(v)) throw DataError("rule " + r.name + ": unsafe head variable ?" + v);
    }
}

namespace detail {

inline bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
inline bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class RuleParser {
public:
    RuleParser(std::string_view text, std::size_t line) : text_(text), line_(line) {}

    Rule parse() {
        Rule r;
        skip_ws();
        r.name = try_name();
        r.body = parse_atoms();
        skip_ws();
        if (!consume("->")) fail("expected '->' or '^'");
        r.head = parse_atoms();
        skip_ws();
        if (!at_end()) fail("unexpected trailing text");
        std::size_t head_pos = head_pos_;
        for (const auto& a : r.head)
            if (std::holds_alternative<BuiltinAtom>(a)) {
                pos_ = head_pos;
                fail("builtin atom in rule head");
            }
        try {
            validate(r);
        } catch (const DataError& e) {
            pos_ = 0;
            fail(e.what());
        }
        return r;
    }

private:
    [[noreturn]] void fail(const std::string& message) const { throw ParseError(message, line_, pos_ + 1); }
    bool at_end() const { return pos_ >= text_.size(); }
    char peek() const { return at_end() ? '\0' : text_[pos_]; }
    void skip_ws() {
        while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
    }
    bool consume(std::string_view tok) {
        if (text_.substr(pos_, tok.size()) == tok) {
            pos_ += tok.size();
            return true;
        }
        return false;
    }
    void expect(char c) {
        skip_ws();
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    // "name:" followed by whitespace names the rule; "swrlb:op(" does not.
    std::string try_name() {
        std::size_t start = pos_;
        while (!at_end() && (ident_char(peek()) || peek() == '-' || peek() == '.')) ++pos_;
        if (pos_ > start && peek() == ':' && pos_ + 1 < text_.size() &&
            std::isspace(static_cast<unsigned char>(text_[pos_ + 1]))) {
            std::string name(text_.substr(start, pos_ - start));
            ++pos_;
            skip_ws();
            return name;
        }
        pos_ = start;
        return {};
    }

    std::string ident() {
        if (!ident_start(peek())) fail("expected identifier");
        std::size_t start = pos_;
        while (!at_end() && ident_char(peek())) ++pos_;
        return std::string(text_.substr(start, pos_ - start));
    }

    std::vector<Atom> parse_atoms() {
        std::vector<Atom> atoms;
        skip_ws();
        if (atoms.empty()) head_pos_ = pos_;
        atoms.push_back(parse_atom());
        while (true) {
            skip_ws();
            if (peek() != '^') break;
            ++pos_;
            atoms.push_back(parse_atom());
        }
        return atoms;
    }

    Atom parse_atom() {
        skip_ws();
        std::size_t start = pos_;
        std::string first = ident();
        std::string prefix;
        std::string name = first;
        if (peek() == ':') {
            ++pos_;
            prefix = first;
            name = ident();
        }
        expect('(');
        std::vector<Arg> args;
        skip_ws();
        if (peek() != ')') {
            args.push_back(parse_arg());
            while (true) {
                skip_ws();
                if (peek() != ',') break;
                ++pos_;
                args.push_back(parse_arg());
            }
        }
        expect(')');

        if (!prefix.empty()) {
            if (prefix != "swrlb") {
                pos_ = start;
                fail("unknown prefix '" + prefix + ":'");
            }
            BuiltinOp op;
            if (name == "lessThan") op = BuiltinOp::LessThan;
            else if (name == "lessThanOrEqualTo") op = BuiltinOp::LessThanOrEqual;
            else if (name == "greaterThan") op = BuiltinOp::GreaterThan;
            else if (name == "greaterThanOrEqualTo") op = BuiltinOp::GreaterThanOrEqual;
            else if (name == "equal") op = BuiltinOp::Equal;
            else {
                pos_ = start;
                fail("unknown builtin swrlb:" + name);
            }
            if (args.size() != 2) {
                pos_ = start;
                fail("builtin swrlb:" + name + " takes 2 arguments");
            }
            return BuiltinAtom{op, std::move(args[0]), std::move(args[1])};
        }
        if (args.size() == 1) return ClassAtom{std::move(name), std::move(args[0])};
        if (args.size() == 2) return PropertyAtom{std::move(name), std::move(args[0]), std::move(args[1])};
        pos_ = start;
        fail("atom " + name + " must take 1 or 2 arguments");
    }

    Arg parse_arg() {
        skip_ws();
        char c = peek();
        if (c == '?') {
            ++pos_;
            return Variable{ident()};
        }
        if (c == '"') return parse_literal();
        if (c == '-' || c == '+' || c == '.' || std::isdigit(static_cast<unsigned char>(c))) return parse_number();
        std::string word = ident();
        if (word == "true") return rdf::Literal::boolean(true);
        if (word == "false") return rdf::Literal::boolean(false);
        return Symbol{std::move(word)};
    }

    Arg parse_number() {
        std::size_t start = pos_;
        if (peek() == '-' || peek() == '+') ++pos_;
        while (!at_end() && (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.' || peek() == 'e' ||
                             peek() == 'E' || ((peek() == '-' || peek() == '+') && (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E'))))
            ++pos_;
        std::string lex(text_.substr(start, pos_ - start));
        auto dt = rdf::is_integer_lexical(lex) ? rdf::Datatype::Integer : rdf::Datatype::Decimal;
        try {
            return rdf::Literal(lex, dt);
        } catch (const DataError&) {
            pos_ = start;
            fail("malformed number '" + lex + "'");
        }
    }

    Arg parse_literal() {
        std::size_t start = pos_;
        ++pos_;
        std::string lex;
        while (true) {
            if (at_end()) {
                pos_ = start;
                fail("unterminated string literal");
            }
            char c = peek();
            if (c == '"') break;
            if (c == '\\') {
                ++pos_;
                if (at_end()) fail("bad escape");
                char e = peek();
                if (e == '"' || e == '\\') lex += e;
                else if (e == 'n') lex += '\n';
                else if (e == 't') lex += '\t';
                else fail(std::string("bad escape '\\") + e + "'");
                ++pos_;
                continue;
            }
            lex += c;
            ++pos_;
        }
        ++pos_;
        rdf::Datatype dt = rdf::Datatype::String;
        if (consume("^^")) {
            std::size_t dt_pos = pos_;
            std::string iri;
            if (peek() == '<') {
                auto close = text_.find('>', pos_);
                if (close == std::string_view::npos) fail("unterminated datatype IRI");
                iri = std::string(text_.substr(pos_ + 1, close - pos_ - 1));
                pos_ = close + 1;
            } else {
                std::string p = ident();
                if (p != "xsd" || peek() != ':') {
                    pos_ = dt_pos;
                    fail("expected xsd: datatype");
                }
                ++pos_;
                iri = std::string(rdf::xsd::ns) + ident();
            }
            auto known = rdf::datatype_from_iri(iri);
            if (!known) {
                pos_ = dt_pos;
                fail("unsupported datatype " + iri);
            }
            dt = *known;
        }
        try {
            return rdf::Literal(std::move(lex), dt);
        } catch (const DataError& e) {
            pos_ = start;
            fail(e.what());
        }
    }

    std::string_view text_;
    std::size_t line_;
    std::size_t pos_ = 0;
    std::size_t head_pos_ = 0;
};

inline void write_arg(std::string& out, const Arg& arg) {
    if (auto* v = std::get_if<Variable>(&arg)) {
        out += '?';
        out += v->name;
    } else if (auto* s = std::get_if<Symbol>(&arg)) {
        out += s->name;
    } else {
        const auto& lit = std::get<rdf::Literal>(arg);
        switch (lit.datatype()) {
            case rdf::Datatype::Boolean: out += lit.lexical(); break;
            case rdf::Datatype::Integer: out += lit.lexical(); break;
            case rdf::Datatype::String: {
                out += '"';
                for (char c : lit.lexical()) {
                    if (c == '"' || c == '\\') out += '\\';
                    if (c == '\n') {
                        out += "\\n";
                        continue;
                    }
                    if (c == '\t') {
                        out += "\\t";
                        continue;
                    }
                    out += c;
                }
                out += '"';
                break;
            }
            default: {
                out += '"';
                out += lit.lexical();
                out += "\"^^xsd:";
                out += rdf::datatype_iri(lit.datatype()).substr(rdf::xsd::ns.size());
            }
        }
    }
}

inline void write_atom(std::string& out, const Atom& atom) {
    std::visit(
        [&](const auto& a) {
            using T = std::decay_t<decltype(a)>;
            if constexpr (std::is_same_v<T, ClassAtom>) {
                out += a.cls;
                out += '(';
                write_arg(out, a.arg);
            } else if constexpr (std::is_same_v<T, PropertyAtom>) {
                out += a.property;
                out += '(';
                write_arg(out, a.subject);
                out += ", ";
                write_arg(out, a.object);
            } else {
                out += "swrlb:";
                out += builtin_name(a.op);
                out += '(';
                write_arg(out, a.left);
                out += ", ";
                write_arg(out, a.right);
            }
            out += ')';
        },
        atom);
}

}  // namespace detail

// `line` only affects error locations.
inline Rule parse_rule(std::string_view text, std::size_t line = 1) { return detail::RuleParser(text, line).parse(); }

inline std::string serialize_atom(const Atom& atom) {
    std::string out;
    detail::write_atom(out, atom);
    return out;
}

inline std::string serialize_rule(const Rule& r) {
    std::string out;
    if (!r.name.empty()) {
        out += r.name;
        out += ": ";
    }
    for (std::size_t i = 0; i < r.body.size(); ++i) {
        if (i) out += " ^ ";
        detail::write_atom(out, r.body[i]);
    }
    out += " -> ";
    for (std::size_t i = 0; i < r.head.size(); ++i) {
        if (i) out += " ^ ";
        detail::write_atom(out, r.head[i]);
    }
    return out;
}

// One rule per line, '#' comment lines, optional "name:" prefix. Unnamed
// rules are called r<N> after their 1-based position in the file.
inline std::vector<Rule> parse_rule_file(std::string_view text) {
    std::vector<Rule> out;
    std::set<std::string> names;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        ++line_no;
        auto line = text.substr(start, end - start);
        start = end + 1;
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string_view::npos || line[first] == '#') continue;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
        Rule r = parse_rule(line, line_no);
        if (r.name.empty()) r.name = "r" + std::to_string(out.size() + 1);
        if (!names.insert(r.name).second) throw ParseError("duplicate rule name '" + r.name + "'", line_no, 1);
        out.push_back(std::move(r));
    }
    return out;
}

inline std::string serialize_rule_file(const std::vector<Rule>& rules) {
    std::string out;
    for (const auto& r : rules) {
        out += serialize_rule(r);
        out += '\n';
    }
    return out;
}

}  // namespace liverkg::rules
