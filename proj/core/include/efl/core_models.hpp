#pragma once

// Closed-form homogeneous solutions of the Einstein flow with
// Lambda = n(n-1)/2, their CMC gauge data and the scale-invariant rescaling.
//
// Two background families are supported:
//   Negative:  -dt^2 + sinh^2(t) gamma,  Ric(gamma) = -(n-1) gamma,  t > 0
//   Positive:  -dt^2 + cosh^2(t) gamma,  Ric(gamma) = +(n-1) gamma,  t real
// The Positive family is a solution of the reversed CMC flow (time = -tau).
// Ricci-flat gamma has constant tau = -n and is not representable here.
//
// Every function is pure. Arguments on or beyond a gauge boundary raise
// efl::DomainError instead of returning infinities.

#include <string_view>

namespace efl {

enum class CurvatureSign { Negative, Positive };

std::string_view to_string(CurvatureSign sign);
// Accepts "negative"/"positive" (case-sensitive). Throws PreconditionError.
CurvatureSign parse_curvature_sign(std::string_view text);

// (0, inf) for Negative, (-inf, inf) for Positive.
struct TimeInterval {
  double lower;
  double upper;
  bool open_lower;

  bool contains(double t) const;
};

class BackgroundModel {
 public:
  // Throws DomainError for n < 2.
  BackgroundModel(int n, CurvatureSign sign);

  int dimension() const noexcept { return n_; }
  CurvatureSign sign() const noexcept { return sign_; }
  TimeInterval time_domain() const noexcept;

 private:
  int n_;
  CurvatureSign sign_;
};

struct GaugeQuantities {
  double tau;       // mean curvature of the slice
  double lapse;     // homogeneous CMC lapse at tau
  double scale_sq;  // g(tau) = scale_sq * gamma
};

// Warping factor: sinh(t) for Negative, cosh(t) for Positive.
double scale_factor(const BackgroundModel& model, double t);

// tau(t) = -n coth(t) for Negative, -n tanh(t) for Positive.
double mean_curvature(const BackgroundModel& model, double t);

// N = n/(tau^2 - n^2) (standard gauge, Negative) or n/(n^2 - tau^2)
// (reversed gauge, Positive). Requires tau^2 > n^2 resp. tau^2 < n^2.
double homogeneous_lapse(int n, double tau, CurvatureSign sign);

// Residual of the homogeneous lapse equation (Sigma = 0, Delta N = 0):
// -1 + N(tau^2/n - n) for Negative, 1 + N(tau^2/n - n) for Positive.
double homogeneous_lapse_residual(int n, double tau, double lapse,
                                  CurvatureSign sign);

GaugeQuantities gauge_quantities(const BackgroundModel& model, double t);

struct CmcTimeMap {
  double tau;
  double scale;  // s(tau): (tau/n)^2 - 1 resp. 1 - (tau/n)^2
};

// Rescaled time T -> (tau(T), s(tau(T))).
// Negative: tau = -n cosh(T)/sinh(T), T > 0, s = sinh(T)^-2.
// Positive: tau = -n sinh(T)/cosh(T), T real, s = cosh(T)^-2.
CmcTimeMap cmc_time_maps(int n, CurvatureSign sign, double T);

// Scale factor s(tau) of the rescaling g = s(tau) g~.
double rescaling_scale(int n, CurvatureSign sign, double tau);

// A homothetic, shift-free state of the rescaled flow:
// g = metric_scale * gamma, Sigma = 0, spatially constant lapse.
struct HomotheticRescaledState {
  double metric_scale;
  double lapse;
};

// Coefficients (of gamma) of dg/dT and dSigma/dT, plus the residual of the
// rescaled lapse equation, for a homothetic state.
struct RescaledRates {
  double metric;
  double sigma;
  double lapse_equation;
};

RescaledRates rescaled_rates(int n, CurvatureSign sign, double T,
                             const HomotheticRescaledState& state);

struct RescaledResidual {
  double metric;
  double sigma;
};

// The rescaled evolution equations evaluated at the background
// (g = gamma, Sigma = 0, N = 1/n, X = 0). Both entries vanish.
RescaledResidual rescaled_background_residual(int n, CurvatureSign sign,
                                              double T);

}  // namespace efl
