#pragma once

#include <stdexcept>
#include <string>

namespace hpgan {

// Base for every error raised by the library. Subclasses let callers (the CLI
// in particular) map failures onto exit codes without string matching.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor extents disagree with what an operation needs.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf produced or observed at an op boundary.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Misuse of the autodiff tape: backward on a non-scalar or detached value,
// or a second backward through the same loss.
class GraphError : public Error {
 public:
  using Error::Error;
};

// Invalid ModelConfig or option values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed, inconsistent or out-of-range input data.
class DataError : public Error {
 public:
  using Error::Error;
};

// Checkpoint could not be written or parsed.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace hpgan
