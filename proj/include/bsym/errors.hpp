#pragma once

#include <stdexcept>
#include <string>

namespace bsym {

/// Malformed input (JSON descriptors, bad expression schemas).
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Evaluation outside the chart's domain box, or a trajectory leaving it.
class DomainError : public std::runtime_error {
public:
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure: singular solve, step-size underflow, non-convergence.
class NumericsError : public std::runtime_error {
public:
    explicit NumericsError(const std::string& what) : std::runtime_error(what) {}
};

/// Violated structural precondition (degree overflow, rank mismatch, ...).
class PreconditionError : public std::invalid_argument {
public:
    explicit PreconditionError(const std::string& what) : std::invalid_argument(what) {}
};

} // namespace bsym
