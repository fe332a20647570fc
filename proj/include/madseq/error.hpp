#pragma once

#include <stdexcept>
#include <string>

namespace madseq {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration: bad hyperparameters, mismatched grids, empty inputs.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Bad input data (off-grid observations, malformed CSV, out-of-range values).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of an operation does not hold for its inputs.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: non-convergence, zero-mass conditioning, unsupported rate.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace madseq
