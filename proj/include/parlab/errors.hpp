#pragma once

#include <stdexcept>
#include <string>

namespace parlab {

// Invalid configuration: bad task id, shape mismatch, illegal option combination.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An API called in violation of its precondition.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A quantity is undefined for the given inputs (e.g. KL with p > 0 where q = 0).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// NaN/Inf encountered at runtime.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Persisted file problems. Subclasses name the specific failure.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class BadMagicError : public DataError {
 public:
  using DataError::DataError;
};
class BadVersionError : public DataError {
 public:
  using DataError::DataError;
};
class ChecksumError : public DataError {
 public:
  using DataError::DataError;
};
class DimensionMismatchError : public DataError {
 public:
  using DataError::DataError;
};

// Offline data generation could not produce the requested tier.
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace parlab
