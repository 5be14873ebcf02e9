#pragma once

#include <stdexcept>
#include <string>

namespace clab {

/// Invalid or inconsistent run configuration (bad key, bad value, mismatched
/// sections). Maps to process exit code 2 in the CLI.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numeric failure surfaced as an error: non-finite loss, NaN gradient,
/// degenerate geometry. Maps to exit code 3.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// File | format | serialization failure. Maps to exit code 4.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace clab
