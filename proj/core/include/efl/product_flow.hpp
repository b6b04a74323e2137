#pragma once

// Homogeneous warped products -dt^2 + a(t)^2 s g_M + b(t)^2 s/(2s-1) g_N
// over two m-dimensional Einstein factors with Ric = +-(n-1) g, n = 2m,
// written in log scale factors x = log a, y = log b.

#include <optional>

#include "efl/core_models.hpp"

namespace efl {

struct FlowConfig {
  int m = 2;
  CurvatureSign sign = CurvatureSign::Positive;
  double s = 1.0;
  double vol_M = 1.0;
  double vol_N = 1.0;

  int n() const noexcept { return 2 * m; }

  // Throws PreconditionError unless m >= 1, s > 1/2, volumes > 0.
  void validate() const;

  // Builds a config from the total spatial dimension; n must be even, >= 2.
  static FlowConfig from_dimension(int n, CurvatureSign sign, double s,
                                   double vol_M = 1.0, double vol_N = 1.0);
};

struct FlowState {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double xp = 0.0;
  double yp = 0.0;
};

// Time-symmetric data a = b = 1, a' = b' = 0 for Positive; a' = b' = sqrt(2)
// for Negative. Both satisfy the Hamiltonian constraint.
FlowState initial_state(const FlowConfig& config);

struct Acceleration {
  double xpp;
  double ypp;
};

// Below this log scale factor e^{-2x} is treated as overflow.
inline constexpr double kLogScaleGuard = -300.0;

// Second derivatives from the Einstein equations Ric = n g.
// Throws OverflowError when x or y < kLogScaleGuard or the state is not finite.
Acceleration rhs(const FlowConfig& config, const FlowState& state);

// x'' + y'' + x'^2 + y'^2 - 2, the 00-component of Ric = n g.
double first_integral_residual(const FlowConfig& config, const FlowState& state,
                               const Acceleration& acc);

enum class HamiltonianBranch {
  Minus,       // tau^2 > n^2: H-_red = (tau^2/n - n)^{n/2} vol
  Plus,        // tau^2 < n^2: H+_red = (n - tau^2/n)^{n/2} vol
  OutOfRange,  // |tau| indistinguishable from n
};

struct Observables {
  double tau = 0.0;
  double sigma_sq = 0.0;
  double scalar_curv = 0.0;
  double ham_residual = 0.0;
  double first_integral_residual = 0.0;
  double volume = 0.0;
  HamiltonianBranch branch = HamiltonianBranch::OutOfRange;
  std::optional<double> h_red;
};

// Mean curvature, |Sigma|^2, spatial scalar curvature, constraint residuals
// and the reduced Hamiltonian.
//
// h_red uses the gauge gap tau^2/n - n in its constraint-eliminated form
// (|Sigma|^2 - R)/(n-1), which is free of the cancellation that the direct
// form suffers as |tau| -> n. The branch is reported only when the direct and
// constraint-eliminated gaps agree in sign; otherwise h_red is empty.
Observables observables(const FlowConfig& config, const FlowState& state);

// Reduced Hamiltonian on a fixed branch, or nullopt when the state lies on
// the other side of |tau| = n.
std::optional<double> reduced_hamiltonian(const FlowConfig& config,
                                          const FlowState& state,
                                          HamiltonianBranch branch);

// log vol(g_t) = m(x+y) + log vol(M, s g_M) + log vol(N, s/(2s-1) g_N).
double log_volume(const FlowConfig& config, const FlowState& state);

// vol(M, a^2 g_M(s)) / vol(N, b^2 g_N(s)) for a given lim (x - y).
double limit_volume_ratio(const FlowConfig& config, double x_minus_y_limit);

// (n-1)/n; below it the M factor recollapses (Positive family).
double lower_threshold(int n);
// (n-1)/(n-2); above it the N factor recollapses. Absent for n = 2.
std::optional<double> upper_threshold(int n);

}  // namespace efl
