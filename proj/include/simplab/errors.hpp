#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace simplab {

// Base of every domain error. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input text; line and column are 1-based, 0 when unknown.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line, std::size_t column = 0);

    // The same error with `source` (usually a file path) prefixed.
    ParseError in_source(const std::string& source) const;

    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    struct Prefixed {};
    ParseError(Prefixed, const std::string& full, std::size_t line, std::size_t column);

    std::size_t line_;
    std::size_t column_;
};

// A grammar that parses but violates a structural invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

class OutOfVocabularyError : public Error {
public:
    OutOfVocabularyError(const std::string& token, std::size_t line = 0);

    const std::string& token() const { return token_; }
    std::size_t line() const { return line_; }

private:
    std::string token_;
    std::size_t line_;
};

// Conditioning on an event of probability zero.
class ConditioningError : public Error {
public:
    using Error::Error;
};

// Every hypothesis in a mixture assigns zero probability to the observations.
class ClassExhaustedError : public Error {
public:
    using Error::Error;
};

// Exact enumeration would exceed the configured leaf budget.
class BudgetExceededError : public Error {
public:
    using Error::Error;
};

// A numeric argument outside the domain an operation is defined on.
class ParameterError : public Error {
public:
    using Error::Error;
};

} // namespace simplab
