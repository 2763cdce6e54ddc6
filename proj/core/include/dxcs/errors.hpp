#pragma once

#include <stdexcept>
#include <string>

namespace dxcs {

// Invalid configuration or architecture spec (CLI exit code 2).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad input data or malformed file (CLI exit code 3).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed serialized stream.
struct FormatError : DataError {
    explicit FormatError(const std::string& msg) : DataError(msg) {}
};

} // namespace dxcs
