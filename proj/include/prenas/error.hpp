/**
 * @file error.hpp
 * @brief Exception types shared across the library.
 *
 * The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
 * everything else -> 3.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace prenas {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed genotype text or matrix.
struct ParseError : DataError {
    using DataError::DataError;
};

/// Genotype key absent from an oracle table.
struct MissingGenotype : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Every neighbour of a parent is already in the history.
struct ParentExhausted : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Non-finite training loss.
struct Divergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace prenas
