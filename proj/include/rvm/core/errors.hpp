#pragma once

#include <stdexcept>
#include <string>

namespace rvm {

// Bad configuration, unusable paths, malformed files. CLI exit code 2.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite losses/gradients and unreachable metric operating points.
// CLI exit code 3.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rvm
