#pragma once

#include <stdexcept>
#include <string>

namespace sptrack {

/// Bad configuration, dimension mismatch or invalid argument.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite value or failed numerical routine.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, long index = -1)
      : std::runtime_error(what), index_(index) {}
  long index() const { return index_; }

 private:
  long index_;
};

/// Linear system too ill-conditioned to solve reliably.
class SingularJacobianError : public NumericError {
 public:
  SingularJacobianError(const std::string& what, double cond)
      : NumericError(what), cond_(cond) {}
  double condition() const { return cond_; }

 private:
  double cond_;
};

/// Raised by run_trajectory when the ground-truth solve fails.
class TrajectoryAborted : public std::runtime_error {
 public:
  TrajectoryAborted(const std::string& what, long step)
      : std::runtime_error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

}  // namespace sptrack
