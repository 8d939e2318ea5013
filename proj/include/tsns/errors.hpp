#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tsns {

/// Invalid configuration (bad parameters, mismatched lattices, unknown keys).
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Request outside the representable window or off the time grid.
class RangeError : public std::runtime_error {
  public:
    explicit RangeError(const std::string& what) : std::runtime_error(what) {}
};

/// A time step produced nonfinite coefficients or tripped the norm guard.
/// Carries the index of the offending step.
class BlowUpError : public std::runtime_error {
  public:
    BlowUpError(const std::string& what, std::size_t step)
        : std::runtime_error(what), step_index(step) {}
    std::size_t step_index;
};

class IoError : public std::runtime_error {
  public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tsns
