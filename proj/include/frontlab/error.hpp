#pragma once

#include <stdexcept>
#include <string>

namespace frontlab {

/// Base of every error raised by the library. The CLI maps the concrete
/// subclass to an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two fields that must share a grid do not.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A scalar argument is outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Geometry does not fit inside the computational domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An admissible initial condition could not be certified.
class ConstructionError : public Error {
 public:
  using Error::Error;
};

/// An explicit step would violate its stability bound.
class StabilityError : public Error {
 public:
  using Error::Error;
};

/// The zero level set reached the far-field ring.
class FrontEscapeError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent scenario configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Failure reading or writing an artifact.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace frontlab
