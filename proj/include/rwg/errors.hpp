#pragma once
#include <stdexcept>

namespace rwg {

// Thrown for bad configurations / inputs (CLI maps these to exit code 2).
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a numerical procedure fails to converge or produces
// non-finite values (CLI maps these to exit code 3).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace rwg
