#pragma once

#include <stdexcept>
#include <string>

namespace sg {

// Input file cannot be read or has malformed content.
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Parsed data or a config violates a contract (bad label ids, shape
// mismatches, invalid hyperparameters, ...).
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Training produced a non-finite loss or gradient.
struct DivergenceError : std::runtime_error {
  explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace sg
