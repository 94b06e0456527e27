#pragma once

#include <stdexcept>
#include <string>

namespace mvib {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller violated an operation's precondition (unknown name, bad shape, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A quantity that must be nonnegative came out clearly negative.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// Malformed or truncated serialized data.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace mvib
