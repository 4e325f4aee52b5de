#pragma once

#include <stdexcept>

namespace aoii {

// Numeric argument outside the mathematical domain of an operation.
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// An iterative solver exhausted its budget without meeting its tolerance.
struct NonConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A queue would grow without bound (C5 violated).
struct StabilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An optimization subproblem has an empty feasible set.
struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent configuration input.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An estimator was handed an empty sample.
struct EmptyInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace aoii
