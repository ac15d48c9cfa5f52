#pragma once

#include <stdexcept>
#include <string>

namespace hqed {

// Malformed user input: bad config files, unknown keys, invalid ranges.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure: non-convergence, undefined model point, integrator blowup.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hqed
