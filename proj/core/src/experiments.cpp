#include "efl/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include "efl/errors.hpp"

namespace efl {

namespace {

void require_horizon(double horizon) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw PreconditionError("horizon must be finite and positive");
  }
}

bool near_threshold(const FlowConfig& config) {
  if (config.sign != CurvatureSign::Positive) return false;
  const int n = config.n();
  if (std::abs(config.s - lower_threshold(n)) < kLowConfidenceBand) return true;
  const auto upper = upper_threshold(n);
  return upper && std::abs(config.s - *upper) < kLowConfidenceBand;
}

}  // namespace

std::string_view to_string(Verdict verdict) {
  return verdict == Verdict::Recollapse ? "Recollapse" : "CompleteWithinHorizon";
}

std::string_view to_string(MonotonicityVerdict verdict) {
  switch (verdict) {
    case MonotonicityVerdict::Constant: return "Constant";
    case MonotonicityVerdict::MonotoneNonIncreasing: return "MonotoneNonIncreasing";
    case MonotonicityVerdict::MonotoneNonDecreasing: return "MonotoneNonDecreasing";
    case MonotonicityVerdict::NonMonotone: return "NonMonotone";
  }
  return "unknown";
}

IntegratorSettings classification_settings(double horizon) {
  IntegratorSettings settings;
  settings.rel_tol = 1e-12;
  settings.abs_tol = 1e-14;
  settings.t_max = horizon;
  settings.output_dt = 0.05;
  return settings;
}

Classification classify(const FlowConfig& config, double horizon,
                        const EventSpec& events) {
  config.validate();
  require_horizon(horizon);
  const Trajectory trajectory =
      integrate(config, classification_settings(horizon), events);
  const Termination& term = trajectory.termination();

  Classification result;
  result.horizon = horizon;
  result.diagnostics.max_constraint_residual = trajectory.max_abs_ham_residual();
  result.diagnostics.max_step_first_integral_residual =
      trajectory.stats().max_step_first_integral_residual;
  result.diagnostics.termination = term.kind;
  result.diagnostics.trigger = term.trigger;
  result.diagnostics.accepted_steps = trajectory.stats().accepted_steps;
  result.diagnostics.low_confidence = near_threshold(config);

  switch (term.kind) {
    case TerminationKind::ReachedHorizon:
      result.verdict = Verdict::CompleteWithinHorizon;
      break;
    case TerminationKind::BlowUpEvent:
      result.verdict = Verdict::Recollapse;
      result.t_blowup = term.t;
      break;
    case TerminationKind::StepSizeCollapse:
      result.verdict = Verdict::Recollapse;
      result.t_blowup = term.t;
      result.diagnostics.low_confidence = true;
      break;
  }
  return result;
}

BisectionResult bisect_critical(int n, CurvatureSign sign, double s_lo, double s_hi,
                                double tol, double horizon) {
  if (sign != CurvatureSign::Positive) {
    throw PreconditionError(
        "critical-coupling bisection applies to the positive-curvature family only");
  }
  if (!(s_lo < s_hi)) throw PreconditionError("bracket requires s_lo < s_hi");
  if (!(tol > 0.0)) throw PreconditionError("tolerance must be positive");
  require_horizon(horizon);

  auto verdict_at = [&](double s) {
    return classify(FlowConfig::from_dimension(n, sign, s), horizon).verdict;
  };

  BisectionResult result;
  result.horizon_used = horizon;
  result.verdict_lo = verdict_at(s_lo);
  result.verdict_hi = verdict_at(s_hi);
  if (result.verdict_lo == result.verdict_hi) {
    throw BracketError("bracket endpoints both classify as " +
                       std::string(to_string(result.verdict_lo)));
  }
  while (s_hi - s_lo > tol) {
    const double mid = 0.5 * (s_lo + s_hi);
    if (verdict_at(mid) == result.verdict_lo) {
      s_lo = mid;
    } else {
      s_hi = mid;
    }
    ++result.iterations;
  }
  result.s_lo = s_lo;
  result.s_hi = s_hi;
  return result;
}

bool in_convergent_regime(const FlowConfig& config) {
  if (config.sign == CurvatureSign::Negative) return true;
  const int n = config.n();
  if (!(config.s > lower_threshold(n))) return false;
  const auto upper = upper_threshold(n);
  return !upper || config.s < *upper;
}

std::optional<double> fit_decay_rate(const std::vector<Sample>& samples) {
  std::vector<std::pair<double, double>> points;
  for (const Sample& s : samples) {
    const double gap = std::abs(s.state.xp - s.state.yp);
    if (gap > 1e-13) points.emplace_back(s.state.t, std::log(gap));
  }
  const std::size_t first = points.size() / 2;
  const std::size_t count = points.size() - first;
  if (count < 2) return std::nullopt;

  double mean_t = 0.0;
  double mean_v = 0.0;
  for (std::size_t i = first; i < points.size(); ++i) {
    mean_t += points[i].first;
    mean_v += points[i].second;
  }
  mean_t /= static_cast<double>(count);
  mean_v /= static_cast<double>(count);
  double cov = 0.0;
  double var = 0.0;
  for (std::size_t i = first; i < points.size(); ++i) {
    const double dt = points[i].first - mean_t;
    cov += dt * (points[i].second - mean_v);
    var += dt * dt;
  }
  if (var == 0.0) return std::nullopt;
  return cov / var;
}

LimitEstimate limit_Cs(const FlowConfig& config, double horizon) {
  config.validate();
  require_horizon(horizon);
  if (!in_convergent_regime(config)) {
    throw RegimeError("s = " + std::to_string(config.s) +
                      " is outside the convergent regime of x - y");
  }
  IntegratorSettings settings = classification_settings(horizon);
  settings.output_dt = 0.01;
  const Trajectory trajectory = integrate(config, settings);
  if (trajectory.termination().kind != TerminationKind::ReachedHorizon) {
    throw RegimeError("trajectory did not reach the horizon");
  }
  const std::vector<Sample>& samples = trajectory.samples();
  const FlowState& last = samples.back().state;

  LimitEstimate estimate;
  estimate.value = last.x - last.y;
  estimate.volume_ratio = limit_volume_ratio(config, estimate.value);

  const auto tail_begin = static_cast<std::size_t>(0.8 * static_cast<double>(samples.size()));
  double lo = estimate.value;
  double hi = estimate.value;
  for (std::size_t i = tail_begin; i < samples.size(); ++i) {
    const double d = samples[i].state.x - samples[i].state.y;
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  estimate.tail_variation = hi - lo;
  estimate.decay_rate = fit_decay_rate(samples);

  const Trajectory oracle = integrate_oracle(config, kOracleStep, horizon, {}, horizon);
  if (oracle.termination().kind != TerminationKind::ReachedHorizon) {
    throw RegimeError("oracle trajectory did not reach the horizon");
  }
  const FlowState& oracle_last = oracle.samples().back().state;
  estimate.cross_check_delta = std::abs(estimate.value - (oracle_last.x - oracle_last.y));
  return estimate;
}

MonotonicityVerdict monotonicity_verdict(std::span<const AuditPoint> series,
                                         double constant_tol, double noise_floor,
                                         std::size_t* increases,
                                         std::size_t* decreases) {
  std::size_t inc = 0;
  std::size_t dec = 0;
  MonotonicityVerdict verdict = MonotonicityVerdict::Constant;
  if (series.size() >= 2) {
    double lo = series.front().h_red;
    double hi = lo;
    double scale = 0.0;
    for (const AuditPoint& p : series) {
      lo = std::min(lo, p.h_red);
      hi = std::max(hi, p.h_red);
      scale = std::max(scale, std::abs(p.h_red));
    }
    const double noise = noise_floor * scale;
    for (std::size_t i = 1; i < series.size(); ++i) {
      const double d = series[i].h_red - series[i - 1].h_red;
      if (d > noise) ++inc;
      if (d < -noise) ++dec;
    }
    const double reference = std::abs(series.front().h_red);
    if ((hi - lo) <= constant_tol * reference) {
      verdict = MonotonicityVerdict::Constant;
    } else if (inc > 0 && dec > 0) {
      verdict = MonotonicityVerdict::NonMonotone;
    } else if (dec > 0) {
      verdict = MonotonicityVerdict::MonotoneNonIncreasing;
    } else if (inc > 0) {
      verdict = MonotonicityVerdict::MonotoneNonDecreasing;
    } else {
      verdict = series.back().h_red < series.front().h_red
                    ? MonotonicityVerdict::MonotoneNonIncreasing
                    : MonotonicityVerdict::MonotoneNonDecreasing;
    }
  }
  if (increases) *increases = inc;
  if (decreases) *decreases = dec;
  return verdict;
}

HamiltonianAudit hamiltonian_audit(const FlowConfig& config, double horizon) {
  config.validate();
  require_horizon(horizon);
  const Trajectory trajectory = integrate(config, classification_settings(horizon));
  const std::vector<Sample>& samples = trajectory.samples();

  HamiltonianAudit audit;
  audit.termination = trajectory.termination();
  audit.branch = samples.front().obs.branch;
  if (audit.branch == HamiltonianBranch::OutOfRange) {
    throw GaugeRangeError("initial slice has |tau| = n; no reduced Hamiltonian",
                          samples.front().state.t, 0);
  }
  audit.series.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto h = reduced_hamiltonian(config, samples[i].state, audit.branch);
    if (!h) {
      throw GaugeRangeError("trajectory left the gauge range of its reduced Hamiltonian",
                            samples[i].state.t, i);
    }
    audit.series.push_back({samples[i].state.t, *h});
  }

  double lo = audit.series.front().h_red;
  double hi = lo;
  for (const AuditPoint& p : audit.series) {
    lo = std::min(lo, p.h_red);
    hi = std::max(hi, p.h_red);
  }
  audit.relative_variation = (hi - lo) / std::abs(audit.series.front().h_red);
  const double change = audit.series.back().h_red - audit.series.front().h_red;
  audit.empirical_sign = (change > 0.0) - (change < 0.0);
  audit.verdict = monotonicity_verdict(audit.series, kConstantTolerance, kAuditNoiseFloor,
                                       &audit.increases, &audit.decreases);
  return audit;
}

std::vector<SweepRow> sweep(int n, CurvatureSign sign, std::span<const double> s_grid,
                            double horizon, unsigned threads) {
  require_horizon(horizon);
  std::vector<SweepRow> rows(s_grid.size());
  if (rows.empty()) return rows;

  auto compute_row = [&](std::size_t i) {
    SweepRow& row = rows[i];
    row.s = s_grid[i];
    try {
      const FlowConfig config = FlowConfig::from_dimension(n, sign, row.s);
      row.classification = classify(config, horizon);
      if (row.classification->verdict == Verdict::CompleteWithinHorizon &&
          in_convergent_regime(config)) {
        row.limit = limit_Cs(config, horizon);
      }
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  const auto workers = static_cast<unsigned>(
      std::min<std::size_t>(threads, rows.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < rows.size(); ++i) compute_row(i);
    return rows;
  }

  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < rows.size(); i = next++) compute_row(i);
      });
    }
  }
  return rows;
}

}  // namespace efl
