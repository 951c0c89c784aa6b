#pragma once

#include <stdexcept>

namespace rulenet {

// Dimension mismatch between tensors/params.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Invalid hyperparameter / configuration value.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Bad input data (CSV parse failures, non-binary labels, empty splits, ...).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Training-time failure (non-finite loss, degenerate split, ...).
struct TrainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised by verification utilities when a usable configuration cannot be found.
struct DiagnosticError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace rulenet
