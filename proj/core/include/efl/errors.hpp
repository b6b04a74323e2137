#pragma once

#include <stdexcept>
#include <string>

namespace efl {

// Argument outside the domain of a closed-form quantity (gauge breakdown,
// t outside the model's time interval, non-admissible mean curvature).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// e^{-2x} or e^{-2y} would overflow; the trajectory is at or past blow-up.
class OverflowError : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

// An operation was called outside its documented precondition.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Bisection endpoints classify identically.
class BracketError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

// Limit extraction requested for a recollapsing configuration.
class RegimeError : public PreconditionError {
 public:
  using PreconditionError::PreconditionError;
};

// A reduced-Hamiltonian audit left the gauge range it started in.
class GaugeRangeError : public std::runtime_error {
 public:
  GaugeRangeError(const std::string& what, double t, std::size_t sample)
      : std::runtime_error(what), t_(t), sample_(sample) {}

  double t() const noexcept { return t_; }
  std::size_t sample() const noexcept { return sample_; }

 private:
  double t_;
  std::size_t sample_;
};

}  // namespace efl
