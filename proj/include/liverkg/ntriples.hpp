#pragma once

#include <liverkg/error.hpp>
#include <liverkg/graph.hpp>
#include <liverkg/term.hpp>

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace liverkg::rdf {

namespace detail {

inline void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

class LineParser {
public:
    LineParser(std::string_view line, std::size_t line_no) : text_(line), line_(line_no) {}

    // Returns false for blank and comment-only lines.
    bool parse(Triple& out) {
        skip_ws();
        if (at_end() || peek() == '#') return false;
        Iri subject = parse_subject();
        skip_ws();
        Iri predicate = parse_iri("predicate");
        skip_ws();
        Term object = parse_object();
        skip_ws();
        if (at_end() || peek() != '.') fail("missing final '.'");
        ++pos_;
        skip_ws();
        if (!at_end() && peek() != '#') fail("unexpected content after '.'");
        out = Triple{std::move(subject), std::move(predicate), std::move(object)};
        return true;
    }

private:
    [[noreturn]] void fail(const std::string& message) const { throw ParseError(message, line_, pos_ + 1); }

    bool at_end() const { return pos_ >= text_.size(); }
    char peek() const { return text_[pos_]; }
    void skip_ws() {
        while (!at_end() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) ++pos_;
    }

    Iri parse_subject() {
        if (!at_end() && peek() == '_') fail("blank nodes are not supported");
        return parse_iri("subject");
    }

    Iri parse_iri(const char* role) {
        if (at_end() || peek() != '<') fail(std::string("expected IRI for ") + role);
        std::size_t start = pos_;
        ++pos_;
        std::string value;
        while (true) {
            if (at_end()) {
                pos_ = start;
                fail("unterminated IRI");
            }
            char c = peek();
            if (c == '>') break;
            if (c == '\\') {
                ++pos_;
                if (at_end() || (peek() != 'u' && peek() != 'U')) fail("bad escape in IRI");
                read_unicode_escape(value);
                continue;
            }
            value += c;
            ++pos_;
        }
        ++pos_;
        if (auto problem = Iri::validate(value)) {
            pos_ = start;
            fail("invalid IRI: " + *problem);
        }
        return Iri(std::move(value));
    }

    void read_unicode_escape(std::string& out) {
        int digits = peek() == 'u' ? 4 : 8;
        ++pos_;
        std::uint32_t cp = 0;
        for (int i = 0; i < digits; ++i) {
            if (at_end()) fail("truncated unicode escape");
            char c = peek();
            std::uint32_t d;
            if (c >= '0' && c <= '9') d = c - '0';
            else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
            else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
            else fail("bad hex digit in unicode escape");
            cp = cp * 16 + d;
            ++pos_;
        }
        if (cp > 0x10FFFF) fail("unicode escape out of range");
        append_utf8(out, cp);
    }

    Term parse_object() {
        if (at_end()) fail("expected object");
        if (peek() == '<') return parse_iri("object");
        if (peek() == '_') fail("blank nodes are not supported");
        if (peek() != '"') fail("expected IRI or literal for object");
        std::size_t start = pos_;
        ++pos_;
        std::string lexical;
        while (true) {
            if (at_end()) {
                pos_ = start;
                fail("unterminated literal");
            }
            char c = peek();
            if (c == '"') break;
            if (c == '\\') {
                ++pos_;
                if (at_end()) fail("bad escape in literal");
                char e = peek();
                switch (e) {
                    case 't': lexical += '\t'; break;
                    case 'b': lexical += '\b'; break;
                    case 'n': lexical += '\n'; break;
                    case 'r': lexical += '\r'; break;
                    case 'f': lexical += '\f'; break;
                    case '"': lexical += '"'; break;
                    case '\'': lexical += '\''; break;
                    case '\\': lexical += '\\'; break;
                    case 'u':
                    case 'U': read_unicode_escape(lexical); continue;
                    default: fail(std::string("bad escape '\\") + e + "' in literal");
                }
                ++pos_;
                continue;
            }
            lexical += c;
            ++pos_;
        }
        ++pos_;
        Datatype dt = Datatype::String;
        if (!at_end() && peek() == '@') fail("language-tagged literals are not supported");
        if (!at_end() && peek() == '^') {
            if (pos_ + 1 >= text_.size() || text_[pos_ + 1] != '^') fail("expected '^^' before datatype");
            pos_ += 2;
            std::size_t dt_pos = pos_;
            Iri dt_iri = parse_iri("datatype");
            auto known = datatype_from_iri(dt_iri.str());
            if (!known) {
                pos_ = dt_pos;
                fail("unsupported datatype <" + dt_iri.str() + ">");
            }
            dt = *known;
        }
        try {
            return Literal(std::move(lexical), dt);
        } catch (const DataError& e) {
            pos_ = start;
            fail(e.what());
        }
    }

    std::string_view text_;
    std::size_t line_;
    std::size_t pos_ = 0;
};

inline void escape_literal(std::string& out, std::string_view lexical) {
    for (char c : lexical) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '"': out += "\\\""; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            case '\b': out += "\\b"; break;
            case '\f': out += "\\f"; break;
            default: out += c;
        }
    }
}

}  // namespace detail

inline std::string to_ntriples(const Iri& iri) { return "<" + iri.str() + ">"; }

inline std::string to_ntriples(const Literal& lit) {
    std::string out = "\"";
    detail::escape_literal(out, lit.lexical());
    out += '"';
    if (lit.datatype() != Datatype::String) {
        out += "^^<";
        out += datatype_iri(lit.datatype());
        out += '>';
    }
    return out;
}

inline std::string to_ntriples(const Term& term) {
    return std::visit([](const auto& t) { return to_ntriples(t); }, term);
}

inline std::string to_ntriples(const Triple& t) {
    return to_ntriples(t.subject) + " " + to_ntriples(t.predicate) + " " + to_ntriples(t.object) + " .";
}

// Parses one statement per line; '#' lines and blank lines are skipped.
inline Graph parse_ntriples(std::string_view text) {
    Graph g;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        ++line_no;
        Triple t;
        if (detail::LineParser(text.substr(start, end - start), line_no).parse(t)) g.insert(t);
        start = end + 1;
    }
    return g;
}

// A single term in N-Triples syntax.
inline Term parse_term(std::string_view text) {
    Triple t;
    std::string line = "<urn:t:s> <urn:t:p> " + std::string(text) + " .";
    if (!detail::LineParser(line, 1).parse(t)) throw ParseError("empty term", 1, 1);
    return t.object;
}

// Canonical form: statements sorted by their serialized text, one per line.
inline std::string serialize_ntriples(const Graph& g) {
    std::vector<std::string> lines;
    lines.reserve(g.size());
    for (const auto& t : g.triples()) lines.push_back(to_ntriples(t));
    std::sort(lines.begin(), lines.end());
    std::string out;
    for (const auto& line : lines) {
        out += line;
        out += '\n';
    }
    return out;
}

}  // namespace liverkg::rdf
