#pragma once

#include <stdexcept>
#include <string>

namespace qsol {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unknown preset name; the message lists the valid presets.
class CatalogError : public Error {
 public:
  using Error::Error;
};

/// Degenerate polytope data, or a potential that fails to be strictly convex.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Quadrature could not reach the requested tolerance within the node cap.
class RefinementError : public Error {
 public:
  RefinementError(const std::string& what, double last_estimate)
      : Error(what), last_estimate_(last_estimate) {}
  double last_estimate() const noexcept { return last_estimate_; }

 private:
  double last_estimate_;
};

/// Newton solver breakdown (singular Hessian, no descent).
class SolverError : public Error {
 public:
  using Error::Error;
};

/// A symmetry the coordinate conventions guarantee was violated numerically.
class ConventionsError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration, flags, or input files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Emitted file does not match the checksum recorded in the run manifest.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

}  // namespace qsol
