#pragma once

#include <stdexcept>
#include <string>

namespace degenlab {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input: asymmetric matrix, parameter outside its range, grid mismatch.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Point or stencil outside the region where an operation is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

class OutOfRangeError : public Error {
 public:
  using Error::Error;
};

/// Discretization or experiment setup that cannot work (grid too coarse, no admissible center).
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf produced while evaluating a discrete quantity.
class NumericFailure : public Error {
 public:
  using Error::Error;
};

class EmptySetError : public Error {
 public:
  using Error::Error;
};

class UnsupportedOperatorError : public Error {
 public:
  using Error::Error;
};

class InfeasibilityError : public Error {
 public:
  using Error::Error;
};

class DegenerateFitError : public Error {
 public:
  using Error::Error;
};

/// Unreadable config or unwritable output.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace degenlab
