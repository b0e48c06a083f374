#pragma once

#include <stdexcept>
#include <string>

namespace bklab {

// Exit-code classes used by the CLI: DomainError, ConditionError and
// ConfigError map to 2, NumericalError to 3.

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A model condition is not satisfied (admissibility, smoothness,
/// weight exponent, density lower bound).
class ConditionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The model cannot be realized (e.g. coefficient tail never decays).
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An object lacks state needed by the requested operation.
class StateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A numerical routine failed (non-PSD covariance, root bracket failure, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace bklab
