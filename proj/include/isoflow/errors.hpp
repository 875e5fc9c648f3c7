#pragma once

#include <stdexcept>
#include <string>

namespace isoflow {

// Invalid arguments, malformed configs, broken preconditions.
class validation_error : public std::invalid_argument {
 public:
  explicit validation_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// Numerical-stability guards (step-size limits, CFL, non-convergence).
class guard_error : public std::runtime_error {
 public:
  explicit guard_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace isoflow
