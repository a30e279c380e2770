#pragma once

#include <stdexcept>
#include <string>

namespace impnet {

// Shape/dimension violations: mismatched operands, underflowing layer
// geometry, indivisible pool groups, out-of-range slices.
class ShapeError : public std::runtime_error {
public:
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed files, unsupported encodings, unreadable paths.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Unparseable or semantically invalid configuration text.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values detected by a debug-mode scan, or a non-finite loss.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace impnet
