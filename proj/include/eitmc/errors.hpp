#pragma once

#include <stdexcept>
#include <string>

namespace eitmc {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Sizes or shapes that do not fit together.
struct DimensionError : Error {
  using Error::Error;
};

/// Malformed text input. The message names the offending line.
struct ParseError : Error {
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
struct DomainError : Error {
  using Error::Error;
};

/// Factorization breakdown or a sampler that can no longer make progress.
struct NumericalError : Error {
  using Error::Error;
};

/// Invalid run configuration or unreadable input path.
struct ConfigError : Error {
  using Error::Error;
};

struct UnsupportedOperation : Error {
  using Error::Error;
};

}  // namespace eitmc
