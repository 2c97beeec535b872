#pragma once

#include <stdexcept>
#include <string>

namespace cpa {

/// Argument outside the mathematical domain of an operation (e.g. k > N).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Malformed input data: inconsistent history windows, bad JSON, unknown keys.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Scenario configuration rejected by validation.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// No feasible coalition structure exists for the PCS list.
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An internal invariant was violated; always a bug or an inconsistent input pair.
class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A protocol step was invoked out of order (no quorum, no commitments on a run, ...).
class ProtocolError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class RoutingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A clock market was opened with no supplier.
class NoMarketError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InsufficientDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace cpa
