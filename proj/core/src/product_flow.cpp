#include "efl/product_flow.hpp"

#include <cmath>
#include <string>

#include "efl/errors.hpp"

namespace efl {

namespace {

// Coefficients of e^{-2x} and e^{-2y}: (n-1)/s and (2-1/s)(n-1). The second
// is evaluated as (2s-1)(n-1)/s so that it is exactly n at s = (n-1)/(n-2)
// whenever that value is representable, which keeps y identically zero there.
struct CurvatureWeights {
  double x;
  double y;
};

CurvatureWeights curvature_weights(const FlowConfig& config) {
  const double nm1 = config.n() - 1.0;
  return {nm1 / config.s, (2.0 * config.s - 1.0) * nm1 / config.s};
}

double sign_factor(CurvatureSign sign) {
  return sign == CurvatureSign::Positive ? 1.0 : -1.0;
}

Acceleration acceleration(const FlowConfig& config, const FlowState& state) {
  const double n = config.n();
  const CurvatureWeights w = curvature_weights(config);
  const double sgn = sign_factor(config.sign);
  const double half_n = 0.5 * n;
  const double mixed = state.xp * state.yp;
  return {
      n - sgn * w.x * std::exp(-2.0 * state.x) -
          half_n * (state.xp * state.xp + mixed),
      n - sgn * w.y * std::exp(-2.0 * state.y) -
          half_n * (state.yp * state.yp + mixed),
  };
}

}  // namespace

void FlowConfig::validate() const {
  if (m < 1) throw PreconditionError("half-dimension m must be >= 1");
  if (!(s > 0.5) || !std::isfinite(s)) {
    throw PreconditionError("coupling s must be finite and > 1/2");
  }
  if (!(vol_M > 0.0) || !(vol_N > 0.0) || !std::isfinite(vol_M) ||
      !std::isfinite(vol_N)) {
    throw PreconditionError("base volumes must be finite and positive");
  }
}

FlowConfig FlowConfig::from_dimension(int n, CurvatureSign sign, double s,
                                      double vol_M, double vol_N) {
  if (n < 2 || n % 2 != 0) {
    throw PreconditionError("n must be an even integer >= 2, got " +
                            std::to_string(n));
  }
  FlowConfig config{n / 2, sign, s, vol_M, vol_N};
  config.validate();
  return config;
}

FlowState initial_state(const FlowConfig& config) {
  if (config.sign == CurvatureSign::Positive) return {};
  const double v = std::sqrt(2.0);
  return {0.0, 0.0, 0.0, v, v};
}

Acceleration rhs(const FlowConfig& config, const FlowState& state) {
  if (!std::isfinite(state.x) || !std::isfinite(state.y) ||
      !std::isfinite(state.xp) || !std::isfinite(state.yp)) {
    throw OverflowError("non-finite flow state");
  }
  if (state.x < kLogScaleGuard || state.y < kLogScaleGuard) {
    throw OverflowError("log scale factor below overflow guard");
  }
  return acceleration(config, state);
}

double first_integral_residual(const FlowConfig&, const FlowState& state,
                               const Acceleration& acc) {
  return acc.xpp + acc.ypp + state.xp * state.xp + state.yp * state.yp - 2.0;
}

double log_volume(const FlowConfig& config, const FlowState& state) {
  const double m = config.m;
  const double s = config.s;
  return m * (state.x + state.y) + 0.5 * m * std::log(s) +
         0.5 * m * std::log(s / (2.0 * s - 1.0)) + std::log(config.vol_M) +
         std::log(config.vol_N);
}

namespace {

struct GaugeGaps {
  double direct;      // tau^2/n - n
  double constraint;  // (|Sigma|^2 - R)/(n-1)
};

GaugeGaps gauge_gaps(int n, double tau, double sigma_sq, double scalar_curv) {
  const double nd = n;
  return {tau * tau / nd - nd, (sigma_sq - scalar_curv) / (nd - 1.0)};
}

double h_red_from_gap(int n, double gap, double log_vol) {
  return std::exp(0.5 * n * std::log(std::abs(gap)) + log_vol);
}

}  // namespace

Observables observables(const FlowConfig& config, const FlowState& state) {
  const int n = config.n();
  const double m = config.m;
  const CurvatureWeights w = curvature_weights(config);

  Observables obs;
  obs.tau = -m * (state.xp + state.yp);
  const double dv = state.xp - state.yp;
  obs.sigma_sq = 0.5 * m * dv * dv;
  obs.scalar_curv = sign_factor(config.sign) * m *
                    (w.x * std::exp(-2.0 * state.x) + w.y * std::exp(-2.0 * state.y));
  obs.ham_residual = obs.scalar_curv - obs.sigma_sq +
                     obs.tau * obs.tau * (n - 1.0) / n - n * (n - 1.0);

  obs.first_integral_residual =
      first_integral_residual(config, state, acceleration(config, state));

  const double log_vol = log_volume(config, state);
  obs.volume = std::exp(log_vol);

  const GaugeGaps gaps = gauge_gaps(n, obs.tau, obs.sigma_sq, obs.scalar_curv);
  if (gaps.direct > 0.0 && gaps.constraint > 0.0) {
    obs.branch = HamiltonianBranch::Minus;
  } else if (gaps.direct < 0.0 && gaps.constraint < 0.0) {
    obs.branch = HamiltonianBranch::Plus;
  } else {
    obs.branch = HamiltonianBranch::OutOfRange;
  }
  if (obs.branch != HamiltonianBranch::OutOfRange) {
    obs.h_red = h_red_from_gap(n, gaps.constraint, log_vol);
  }
  return obs;
}

std::optional<double> reduced_hamiltonian(const FlowConfig& config,
                                          const FlowState& state,
                                          HamiltonianBranch branch) {
  if (branch == HamiltonianBranch::OutOfRange) return std::nullopt;
  const Observables obs = observables(config, state);
  const int n = config.n();
  const double gap = gauge_gaps(n, obs.tau, obs.sigma_sq, obs.scalar_curv).constraint;
  const bool on_branch =
      branch == HamiltonianBranch::Minus ? gap > 0.0 : gap < 0.0;
  if (!on_branch) return std::nullopt;
  return h_red_from_gap(n, gap, log_volume(config, state));
}

double limit_volume_ratio(const FlowConfig& config, double x_minus_y_limit) {
  const double m = config.m;
  return std::exp(m * x_minus_y_limit) *
         std::pow(2.0 * config.s - 1.0, 0.5 * m) * config.vol_M / config.vol_N;
}

double lower_threshold(int n) { return (n - 1.0) / n; }

std::optional<double> upper_threshold(int n) {
  if (n <= 2) return std::nullopt;
  return (n - 1.0) / (n - 2.0);
}

}  // namespace efl
