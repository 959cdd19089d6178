#pragma once

#include <stdexcept>
#include <string>

namespace rto {

/// Invalid or inconsistent configuration (geometry, parameters, files).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An API was called outside its contract (zero field, empty table, ...).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A nonlinear or linear solve failed. Carries the last residual norm when known.
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what, double residual = -1.0)
      : std::runtime_error(what), residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace rto
