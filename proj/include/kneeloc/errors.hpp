#pragma once

#include <stdexcept>
#include <string>

namespace kneeloc {

/// Violated API contract: bad argument, dimension mismatch, invalid config.
struct ContractError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Malformed or unsupported input bytes (image files, model files).
struct DecodeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Filesystem-level failure.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace kneeloc
