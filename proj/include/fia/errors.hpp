#pragma once

#include <stdexcept>
#include <string>

namespace fia {

// Error taxonomy shared across modules. Each type corresponds to a distinct
// contract violation so callers (and tests) can discriminate without string
// matching.

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DegenerateRowError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EvaluationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

// phi normalization requested for an odd exponent; only the signed path
// supports those kernels.
struct UnsupportedNormalizationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct SingularGradientError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CoverageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyNeighborhoodError : std::runtime_error {
    EmptyNeighborhoodError(const std::string& what, long query_index)
        : std::runtime_error(what), query_index(query_index) {}
    long query_index = -1;
};

struct InsufficientDataError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace fia
