#pragma once

#include <stdexcept>
#include <string>

namespace tddi {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input document (carries a location hint in the message).
class ParseError : public Error {
public:
    using Error::Error;
};

/// A structural invariant of the data model is violated.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Iterative solver failed to converge (typically: operating point infeasible).
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// Estimation problem is numerically singular (e.g. insufficient load change
/// between measurement instants).
class ConditioningError : public Error {
public:
    using Error::Error;
};

/// A quantity is outside the domain of the requested computation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Invalid run configuration or command-line usage.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace tddi
