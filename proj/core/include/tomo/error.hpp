#pragma once

#include <stdexcept>
#include <string>

namespace tomo {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A value outside its admissible domain (e.g. a nonpositive conductivity).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Operands whose dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A linear system that could not be solved to the required accuracy.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// Malformed file contents or a failed read/write.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace tomo
