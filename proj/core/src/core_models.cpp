#include "efl/core_models.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "efl/errors.hpp"

namespace efl {

namespace {

void require_dimension(int n) {
  if (n < 2) {
    throw DomainError("spatial dimension must be >= 2, got " +
                      std::to_string(n));
  }
}

void require_in_domain(const BackgroundModel& model, double t) {
  if (!model.time_domain().contains(t)) {
    throw DomainError("t = " + std::to_string(t) + " outside the " +
                      std::string(to_string(model.sign())) +
                      " background time domain");
  }
}

}  // namespace

std::string_view to_string(CurvatureSign sign) {
  return sign == CurvatureSign::Negative ? "negative" : "positive";
}

CurvatureSign parse_curvature_sign(std::string_view text) {
  if (text == "negative") return CurvatureSign::Negative;
  if (text == "positive") return CurvatureSign::Positive;
  throw PreconditionError("curvature must be 'negative' or 'positive', got '" +
                          std::string(text) + "'");
}

bool TimeInterval::contains(double t) const {
  if (!std::isfinite(t)) return false;
  if (open_lower ? t <= lower : t < lower) return false;
  return t < upper;
}

BackgroundModel::BackgroundModel(int n, CurvatureSign sign)
    : n_(n), sign_(sign) {
  require_dimension(n);
}

TimeInterval BackgroundModel::time_domain() const noexcept {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (sign_ == CurvatureSign::Negative) return {0.0, inf, true};
  return {-inf, inf, true};
}

double scale_factor(const BackgroundModel& model, double t) {
  require_in_domain(model, t);
  return model.sign() == CurvatureSign::Negative ? std::sinh(t) : std::cosh(t);
}

double mean_curvature(const BackgroundModel& model, double t) {
  require_in_domain(model, t);
  const double n = model.dimension();
  if (model.sign() == CurvatureSign::Negative) {
    return -n / std::tanh(t);
  }
  return -n * std::tanh(t);
}

double homogeneous_lapse(int n, double tau, CurvatureSign sign) {
  require_dimension(n);
  if (!std::isfinite(tau)) throw DomainError("mean curvature must be finite");
  const double nn = static_cast<double>(n) * n;
  const double tau_sq = tau * tau;
  if (sign == CurvatureSign::Negative) {
    if (!(tau_sq > nn)) {
      throw DomainError("standard CMC gauge requires tau^2 > n^2");
    }
    return n / (tau_sq - nn);
  }
  if (!(tau_sq < nn)) {
    throw DomainError("reversed CMC gauge requires tau^2 < n^2");
  }
  return n / (nn - tau_sq);
}

double homogeneous_lapse_residual(int n, double tau, double lapse,
                                  CurvatureSign sign) {
  const double gap = tau * tau / n - n;
  const double constant = sign == CurvatureSign::Negative ? -1.0 : 1.0;
  return constant + lapse * gap;
}

GaugeQuantities gauge_quantities(const BackgroundModel& model, double t) {
  const double a = scale_factor(model, t);
  const double tau = mean_curvature(model, t);
  return {tau, homogeneous_lapse(model.dimension(), tau, model.sign()), a * a};
}

double rescaling_scale(int n, CurvatureSign sign, double tau) {
  require_dimension(n);
  const double ratio = tau / n;
  const double s = sign == CurvatureSign::Negative ? (-ratio - 1.0) * (1.0 - ratio)
                                                   : (1.0 - ratio) * (1.0 + ratio);
  if (!(s > 0.0)) {
    throw DomainError("mean curvature outside the gauge range");
  }
  return s;
}

CmcTimeMap cmc_time_maps(int n, CurvatureSign sign, double T) {
  require_dimension(n);
  if (!std::isfinite(T)) throw DomainError("rescaled time must be finite");
  if (sign == CurvatureSign::Negative) {
    if (!(T > 0.0)) throw DomainError("rescaled time must be > 0");
    const double sh = std::sinh(T);
    // (tau/n)^2 - 1 = 1/sinh^2 T without the cancellation.
    return {-n * std::cosh(T) / sh, 1.0 / (sh * sh)};
  }
  const double ch = std::cosh(T);
  return {-n * std::sinh(T) / ch, 1.0 / (ch * ch)};
}

RescaledRates rescaled_rates(int n, CurvatureSign sign, double T,
                             const HomotheticRescaledState& state) {
  require_dimension(n);
  const double nd = n;
  const double c = state.metric_scale;
  const double lapse = state.lapse;
  // Sigma = 0 and X = 0, so every Sigma, Lie-derivative and Hessian term
  // drops out. Ric(c gamma) = Ric(gamma) = +-(n-1) gamma.
  if (sign == CurvatureSign::Negative) {
    if (!(T > 0.0)) throw DomainError("rescaled time must be > 0");
    const double sh = std::sinh(T);
    const double coth = std::cosh(T) / sh;
    const double ricci = -(nd - 1.0);
    RescaledRates rates{};
    rates.metric = -2.0 * coth * (1.0 - nd * lapse) * c;
    rates.sigma = (nd / sh) * lapse * (ricci + nd * c) + (nd / sh) * (-c / nd);
    rates.lapse_equation = -1.0 + lapse * nd;
    return rates;
  }
  // Reversed gauge: (tau^2/n - n) g~ = -n g after rescaling, and the
  // constant term of the g-equation changes sign.
  const double ch = std::cosh(T);
  const double tanh = std::sinh(T) / ch;
  const double ricci = nd - 1.0;
  RescaledRates rates{};
  rates.metric = -2.0 * tanh * (1.0 - nd * lapse) * c;
  rates.sigma = (nd / ch) * lapse * (ricci - nd * c) + (nd / ch) * (c / nd);
  rates.lapse_equation = 1.0 - lapse * nd;
  return rates;
}

RescaledResidual rescaled_background_residual(int n, CurvatureSign sign,
                                              double T) {
  const RescaledRates rates =
      rescaled_rates(n, sign, T, {1.0, 1.0 / static_cast<double>(n)});
  return {rates.metric, rates.sigma};
}

}  // namespace efl
