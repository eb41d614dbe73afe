#pragma once

#include <stdexcept>
#include <string>

namespace decsde {

// Base of every error raised by the toolkit. The CLI maps each subclass to a
// process exit status through exit_code().
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const { return 1; }
};

// Tensor shapes that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 2; }
};

// An index (token id, gram id, row) outside its valid range.
class IndexError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 2; }
};

// API misuse: backward on a non-scalar, an unregistered language, etc.
class ContractError : public Error {
 public:
  using Error::Error;
};

// NaN or Inf produced by a forward op.
class NumericError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 4; }
};

// Bad or inconsistent configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 2; }
};

// Missing files, malformed corpora, unreadable checkpoints.
class DataError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 3; }
};

// Input that a training routine cannot work with (empty corpus, ...).
class InputError : public DataError {
 public:
  using DataError::DataError;
};

// A precomputed embedding table used after the parameters moved on.
class StaleTableError : public Error {
 public:
  using Error::Error;
  int exit_code() const override { return 5; }
};

}  // namespace decsde
