#pragma once

#include <stdexcept>
#include <string>

namespace aflguard {

// Operand shapes disagree (vector dims, feature widths, parameter layout).
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or out-of-range input file contents (CSV rows, config values).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace aflguard
