#pragma once

#include <stdexcept>
#include <string>

namespace fairobnc {

// Invalid parameter or configuration values. CLI exit code 1.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Problems with dataset content: schema mismatches, parse failures,
// degenerate data. CLI exit code 2.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fairobnc
