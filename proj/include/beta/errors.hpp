#pragma once

#include <stdexcept>
#include <string>

namespace beta {

// Error taxonomy shared across the library. The CLI maps these onto exit
// codes: config/validation problems -> 2, missing stage artifacts -> 3,
// numerical failures -> 4.

struct dim_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct parse_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct dependency_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Preconditions about object state (uncalibrated model, missing tape node).
struct state_error : std::logic_error {
    using std::logic_error::logic_error;
};

// Violations of dataset policy (e.g. injecting anomalies into a train split).
struct policy_error : std::logic_error {
    using std::logic_error::logic_error;
};

// A metric is undefined on the given inputs (no positives, empty pool).
struct metric_error : std::domain_error {
    using std::domain_error::domain_error;
};

}  // namespace beta
