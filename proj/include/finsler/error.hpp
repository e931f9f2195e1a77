#pragma once

#include <stdexcept>
#include <string>

namespace finsler {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input too close to a singular point (e.g. gradient of a norm at the origin).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// Rasterization produced no interior node.
class EmptyDomainError : public Error {
 public:
  using Error::Error;
};

/// Field is identically zero where a nonzero one is required.
class ZeroFieldError : public Error {
 public:
  using Error::Error;
};

/// Norm family not supported by the requested operation.
class InvalidNormError : public Error {
 public:
  using Error::Error;
};

/// Iterative solver stopped before reaching its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, int iterations, double residual)
      : Error(what + " (iterations=" + std::to_string(iterations) +
              ", residual=" + std::to_string(residual) + ")"),
        iterations_(iterations),
        residual_(residual) {}

  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  int iterations_;
  double residual_;
};

/// A bipartition step left one part without nodes.
class EmptyPartError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration or unknown option value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace finsler
