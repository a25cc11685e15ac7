#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace liverkg {

// Base for every error thrown by the library. The service layer maps
// the concrete type onto its fixed error-code enumeration.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed text input (N-Triples, rules, queries, reports). Line and
// column are 1-based; 0 means "not applicable".
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t line, std::size_t column)
        : Error(format(message, line, column)), line_(line), column_(column), bare_(message) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }
    const std::string& bare_message() const noexcept { return bare_; }

private:
    static std::string format(const std::string& message, std::size_t line, std::size_t column) {
        if (line == 0) return message;
        return "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message;
    }

    std::size_t line_;
    std::size_t column_;
    std::string bare_;
};

// Structurally valid input that violates a data contract (bad literal,
// missing CSV column, unknown category label, schema cycle).
class DataError : public Error {
public:
    using Error::Error;
};

// Runtime failure while evaluating rules or queries.
class EvaluationError : public Error {
public:
    using Error::Error;
};

// An operation was called outside its contract (e.g. state machine order).
class PreconditionError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

class ConflictError : public Error {
public:
    using Error::Error;
};

}  // namespace liverkg
