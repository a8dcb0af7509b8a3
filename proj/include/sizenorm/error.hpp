#pragma once

#include <stdexcept>
#include <string>

namespace sizenorm {

// Base for everything the library throws. The CLI maps subclasses onto exit
// codes: ConfigError -> 1, DataError -> 2, SolverError -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public DataError {
 public:
  using DataError::DataError;
};

class MissingKey : public DataError {
 public:
  using DataError::DataError;
};

class UnknownSizeType : public DataError {
 public:
  using DataError::DataError;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

class NonFiniteLoss : public SolverError {
 public:
  using SolverError::SolverError;
};

}  // namespace sizenorm
