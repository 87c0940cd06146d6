#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ppgsleep {

// Base of every error the library throws. The CLI maps each family to a
// stable exit code (see tools/cli.cpp).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input data violates a domain invariant (NaN sample, epoch-count mismatch, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

// Malformed text file. line() is 1-based; 0 when not tied to a line.
class ParseError : public ValidationError {
public:
    ParseError(const std::string& what, std::size_t line)
        : ValidationError(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Bad filter-design parameters.
class DesignError : public Error {
public:
    using Error::Error;
};

// Cross-validation protocol violation: too few subjects, single-class fold, ...
class ProtocolError : public Error {
public:
    using Error::Error;
};

}  // namespace ppgsleep
