#pragma once

#include <liverkg/error.hpp>

#include <charconv>
#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <variant>

namespace liverkg::rdf {

namespace xsd {
inline constexpr std::string_view ns = "http://www.w3.org/2001/XMLSchema#";
inline constexpr std::string_view string = "http://www.w3.org/2001/XMLSchema#string";
inline constexpr std::string_view integer = "http://www.w3.org/2001/XMLSchema#integer";
inline constexpr std::string_view float_ = "http://www.w3.org/2001/XMLSchema#float";
inline constexpr std::string_view double_ = "http://www.w3.org/2001/XMLSchema#double";
inline constexpr std::string_view decimal = "http://www.w3.org/2001/XMLSchema#decimal";
inline constexpr std::string_view boolean = "http://www.w3.org/2001/XMLSchema#boolean";
}  // namespace xsd

namespace rdf_ns {
inline constexpr std::string_view type = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
}

// Shortest decimal text that reads back to the same double, always
// carrying a fractional part or exponent ("53.0", "53.05", "1e+20").
inline std::string format_double(double value) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    std::string out(buf, end);
    if (out.find_first_of(".eEn") == std::string::npos) out += ".0";
    return out;
}

// Strict numeric parse: the whole string must be consumed and the value
// finite. A leading '+' is accepted.
inline std::optional<double> parse_number(std::string_view text) {
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    if (text.empty()) return std::nullopt;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) return std::nullopt;
    return value;
}

inline bool is_integer_lexical(std::string_view text) {
    if (!text.empty() && (text.front() == '+' || text.front() == '-')) text.remove_prefix(1);
    if (text.empty()) return false;
    for (char c : text)
        if (c < '0' || c > '9') return false;
    return true;
}

enum class Datatype { String, Integer, Float, Double, Decimal, Boolean };

inline std::string_view datatype_iri(Datatype dt) {
    switch (dt) {
        case Datatype::String: return xsd::string;
        case Datatype::Integer: return xsd::integer;
        case Datatype::Float: return xsd::float_;
        case Datatype::Double: return xsd::double_;
        case Datatype::Decimal: return xsd::decimal;
        case Datatype::Boolean: return xsd::boolean;
    }
    return xsd::string;
}

inline std::optional<Datatype> datatype_from_iri(std::string_view iri) {
    if (iri == xsd::string) return Datatype::String;
    if (iri == xsd::integer) return Datatype::Integer;
    if (iri == xsd::float_) return Datatype::Float;
    if (iri == xsd::double_) return Datatype::Double;
    if (iri == xsd::decimal) return Datatype::Decimal;
    if (iri == xsd::boolean) return Datatype::Boolean;
    return std::nullopt;
}

inline bool is_numeric(Datatype dt) {
    return dt == Datatype::Integer || dt == Datatype::Float || dt == Datatype::Double || dt == Datatype::Decimal;
}

class Iri {
public:
    Iri() = default;

    explicit Iri(std::string value) : value_(std::move(value)) {
        if (auto problem = validate(value_)) throw DataError("invalid IRI <" + value_ + ">: " + *problem);
    }

    const std::string& str() const noexcept { return value_; }

    // Returns a description of the problem, or nullopt for a valid IRI.
    static std::optional<std::string> validate(std::string_view v) {
        if (v.empty()) return "empty";
        for (unsigned char c : v) {
            if (c <= 0x20) return "contains whitespace or control character";
            if (c == '<' || c == '>' || c == '"' || c == '{' || c == '}' || c == '|' || c == '^' || c == '`' ||
                c == '\\')
                return std::string("contains forbidden character '") + static_cast<char>(c) + "'";
        }
        auto colon = v.find(':');
        if (colon == std::string_view::npos || colon == 0) return "not absolute (no scheme)";
        auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); };
        if (!alpha(v[0])) return "scheme must start with a letter";
        for (std::size_t i = 1; i < colon; ++i) {
            char c = v[i];
            if (!(alpha(c) || (c >= '0' && c <= '9') || c == '+' || c == '-' || c == '.'))
                return "invalid scheme character";
        }
        return std::nullopt;
    }

    friend bool operator==(const Iri&, const Iri&) = default;
    friend auto operator<=>(const Iri&, const Iri&) = default;

private:
    std::string value_;
};

// Typed literal. Numeric literals compare by parsed value within their
// datatype, so "7.10"^^float == "7.1"^^float; the lexical form given at
// construction is kept for output.
class Literal {
public:
    Literal() = default;

    Literal(std::string lexical, Datatype datatype) : lexical_(std::move(lexical)), datatype_(datatype) {
        if (is_numeric(datatype_)) {
            if (datatype_ == Datatype::Integer && !is_integer_lexical(lexical_))
                throw DataError("malformed integer literal \"" + lexical_ + "\"");
            auto v = parse_number(lexical_);
            if (!v) throw DataError("malformed numeric literal \"" + lexical_ + "\" for " +
                                    std::string(datatype_iri(datatype_)));
            number_ = *v;
        } else if (datatype_ == Datatype::Boolean) {
            if (lexical_ != "true" && lexical_ != "false")
                throw DataError("malformed boolean literal \"" + lexical_ + "\"");
        }
    }

    static Literal string(std::string s) { return Literal(std::move(s), Datatype::String); }
    static Literal integer(std::int64_t v) { return Literal(std::to_string(v), Datatype::Integer); }
    static Literal float_value(double v) { return Literal(format_double(v), Datatype::Float); }
    static Literal boolean(bool v) { return Literal(v ? "true" : "false", Datatype::Boolean); }

    const std::string& lexical() const noexcept { return lexical_; }
    Datatype datatype() const noexcept { return datatype_; }
    bool numeric() const noexcept { return is_numeric(datatype_); }
    std::optional<double> number() const noexcept {
        if (!numeric()) return std::nullopt;
        return number_;
    }

    friend bool operator==(const Literal& a, const Literal& b) {
        if (a.datatype_ != b.datatype_) return false;
        if (a.numeric()) return a.number_ == b.number_;
        return a.lexical_ == b.lexical_;
    }

    friend std::strong_ordering operator<=>(const Literal& a, const Literal& b) {
        if (auto c = a.datatype_ <=> b.datatype_; c != 0) return c;
        if (a.numeric()) {
            if (a.number_ < b.number_) return std::strong_ordering::less;
            if (b.number_ < a.number_) return std::strong_ordering::greater;
            return std::strong_ordering::equal;
        }
        return a.lexical_ <=> b.lexical_;
    }

private:
    std::string lexical_;
    Datatype datatype_ = Datatype::String;
    double number_ = 0.0;
};

// Object position: IRI or literal. IRIs order before literals.
using Term = std::variant<Iri, Literal>;

inline bool is_iri(const Term& t) { return std::holds_alternative<Iri>(t); }
inline bool is_literal(const Term& t) { return std::holds_alternative<Literal>(t); }

inline std::optional<double> numeric_value(const Term& t) {
    if (auto* lit = std::get_if<Literal>(&t)) return lit->number();
    return std::nullopt;
}

struct Triple {
    Iri subject;
    Iri predicate;
    Term object;

    friend bool operator==(const Triple&, const Triple&) = default;
    friend std::strong_ordering operator<=>(const Triple& a, const Triple& b) {
        if (auto c = a.subject <=> b.subject; c != 0) return c;
        if (auto c = a.predicate <=> b.predicate; c != 0) return c;
        return a.object <=> b.object;
    }
};

}  // namespace liverkg::rdf
