#pragma once

#include <stdexcept>
#include <string>

namespace rim {

/// Root of the library's exception hierarchy. The CLI maps each branch to an
/// exit code: InvalidArgument -> 1, DataError -> 2, anything else -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition or configuration violation by the caller.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Input data that cannot be processed (malformed files, degenerate geometry).
class DataError : public Error {
 public:
  using Error::Error;
};

class DegenerateInput : public DataError {
 public:
  using DataError::DataError;
};

class NotAnEllipse : public DataError {
 public:
  using DataError::DataError;
};

class InsufficientBolts : public DataError {
 public:
  using DataError::DataError;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace rim
