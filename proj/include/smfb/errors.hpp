#pragma once

#include <stdexcept>

namespace smfb {

/// Base class for every error raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree (block length, channel count, filter length).
struct DimensionError : Error {
  using Error::Error;
};

/// A configuration value violates its invariant.
struct ConfigError : Error {
  using Error::Error;
};

/// A Gram matrix or an energy term is too small to divide by.
struct IllConditionedError : Error {
  using Error::Error;
};

/// Not enough blocks have been observed for the requested order.
struct InsufficientDataError : Error {
  using Error::Error;
};

}  // namespace smfb
