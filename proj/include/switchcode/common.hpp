#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace switchcode {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Raised when an experiment config is malformed (CLI exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when input data is missing, malformed, or inconsistent (CLI exit code 3).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when training produces a non-finite loss (CLI exit code 4).
struct DivergenceError : std::runtime_error {
    Index epoch;
    DivergenceError(Index epoch_, const std::string& what_)
        : std::runtime_error(what_), epoch(epoch_) {}
};

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace switchcode
