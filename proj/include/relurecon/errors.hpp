#pragma once

#include <stdexcept>
#include <string>

namespace relurecon {

// Base for every error raised by the library. Precondition violations on
// plain arguments use std::invalid_argument instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class OnBoundaryError : public Error {
 public:
  using Error::Error;
};

class DegeneratePairError : public Error {
 public:
  using Error::Error;
};

class RejectionBudgetError : public Error {
 public:
  using Error::Error;
};

class SingularSystemError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace relurecon
