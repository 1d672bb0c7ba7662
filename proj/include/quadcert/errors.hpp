#pragma once

// Exception types shared by every quadcert module. All derive from
// quadcert::Error so callers (the CLI in particular) can catch one type.

#include <cstddef>
#include <stdexcept>
#include <string>

namespace quadcert {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree (vector length, matrix squareness, term indices).
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A factorization flagged singular was used to solve, or a Jacobian is singular.
class SingularJacobianError : public Error {
public:
    using Error::Error;
};

/// make_nominal was handed a point that does not solve the system.
class NotASolutionError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation (r <= 0, kappa not in (0,1), ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// The system does not have the structure an operation requires.
class UnsupportedFormError : public Error {
public:
    using Error::Error;
};

/// Power-flow model assembly failed (islanded bus, degenerate no-load profile).
class ModelError : public Error {
public:
    using Error::Error;
};

/// Malformed interchange file (CSV, JSON system description).
class FormatError : public Error {
public:
    using Error::Error;
};

/// MATPOWER case text could not be parsed. Carries the 1-based line number.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& message)
        : Error("line " + std::to_string(line) + ": " + message), line_(line), message_(message) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& message() const noexcept { return message_; }

private:
    std::size_t line_;
    std::string message_;
};

} // namespace quadcert
