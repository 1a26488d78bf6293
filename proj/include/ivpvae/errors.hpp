#pragma once

#include <stdexcept>
#include <string>

namespace ivpvae {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on shapes or arguments was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf encountered, step-size underflow, or divergence.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration (unknown key, bad value, inconsistent settings).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// File-system failure; carries the offending path in the message.
class IoError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace ivpvae
