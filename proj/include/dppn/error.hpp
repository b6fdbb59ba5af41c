#pragma once

#include <stdexcept>
#include <string>

namespace dppn {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Structural problem in a genome: bad dims, duplicate edges, dangling ids.
struct ValidationError : Error {
  using Error::Error;
};

// Feedforward property violated.
struct CycleError : ValidationError {
  using ValidationError::ValidationError;
};

// Non-finite value or shape mismatch during evaluation.
struct EvalError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace dppn
