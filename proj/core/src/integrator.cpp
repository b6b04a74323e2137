#include "efl/integrator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

#include "efl/errors.hpp"

namespace efl {

namespace {

using Vec = std::array<double, 4>;  // x, y, x', y'

Vec to_vec(const FlowState& s) { return {s.x, s.y, s.xp, s.yp}; }

FlowState to_state(double t, const Vec& u) { return {t, u[0], u[1], u[2], u[3]}; }

Sample make_sample(const FlowConfig& config, double t, const Vec& u) {
  const FlowState state = to_state(t, u);
  return {state, observables(config, state)};
}

class Rhs {
 public:
  explicit Rhs(const FlowConfig& config) : config_(config) {}

  Vec operator()(const Vec& u) {
    ++evaluations_;
    const Acceleration acc = rhs(config_, to_state(0.0, u));
    return {u[2], u[3], acc.xpp, acc.ypp};
  }

  std::size_t evaluations() const { return evaluations_; }

 private:
  const FlowConfig& config_;
  std::size_t evaluations_ = 0;
};

double step_residual(const Vec& u, const Vec& f) {
  return f[2] + f[3] + u[2] * u[2] + u[3] * u[3] - 2.0;
}

class EventMonitor {
 public:
  EventMonitor(const EventSpec& events, double direction)
      : events_(events), direction_(direction) {}

  double floor_margin(const Vec& u) const {
    return std::min(u[0], u[1]) - events_.y_floor;
  }
  double velocity_margin(const Vec& u) const {
    return direction_ * (u[2] + u[3]) - events_.velocity_floor;
  }
  bool triggered(const Vec& u) const {
    return floor_margin(u) <= 0.0 || velocity_margin(u) <= 0.0;
  }

 private:
  EventSpec events_;
  double direction_;
};

// Output times along the integration direction: k * output_dt, with the
// horizon appended (or snapped onto) as the last entry.
std::vector<double> sample_times(double t_end, double output_dt) {
  const double span = std::abs(t_end);
  const double direction = t_end < 0.0 ? -1.0 : 1.0;
  std::vector<double> times;
  const auto count = static_cast<std::size_t>(std::floor(span / output_dt + 1e-9));
  times.reserve(count + 1);
  for (std::size_t k = 1; k <= count; ++k) {
    times.push_back(direction * static_cast<double>(k) * output_dt);
  }
  if (!times.empty() && std::abs(span - std::abs(times.back())) <= 1e-9 * output_dt) {
    times.back() = t_end;
  } else if (span > 0.0) {
    times.push_back(t_end);
  }
  return times;
}

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                 a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0,
                 a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                 a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
// Dense output (Hairer & Wanner, DOPRI5 contd5).
constexpr double d1 = -12715105075.0 / 11282082432.0,
                 d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0,
                 d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0,
                 d7 = 69997945.0 / 29380423.0;

struct DenseStep {
  std::array<Vec, 5> r;
  double t0;
  double h;

  Vec at(double theta) const {
    const double one_minus = 1.0 - theta;
    Vec u{};
    for (std::size_t i = 0; i < 4; ++i) {
      u[i] = r[0][i] +
             theta * (r[1][i] + one_minus * (r[2][i] + theta * (r[3][i] + one_minus * r[4][i])));
    }
    return u;
  }
};

struct StepAttempt {
  Vec u_new;
  Vec k7;
  double error;
  DenseStep dense;
};

StepAttempt dopri_step(Rhs& f, double t, const Vec& u, const Vec& k1, double h,
                       const IntegratorSettings& settings) {
  Vec tmp{};
  auto stage = [&](auto&& combine) {
    for (std::size_t i = 0; i < 4; ++i) tmp[i] = u[i] + h * combine(i);
    return f(tmp);
  };
  const Vec k2 = stage([&](std::size_t i) { return a21 * k1[i]; });
  const Vec k3 = stage([&](std::size_t i) { return a31 * k1[i] + a32 * k2[i]; });
  const Vec k4 = stage([&](std::size_t i) {
    return a41 * k1[i] + a42 * k2[i] + a43 * k3[i];
  });
  const Vec k5 = stage([&](std::size_t i) {
    return a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i];
  });
  const Vec k6 = stage([&](std::size_t i) {
    return a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i];
  });
  Vec u_new{};
  for (std::size_t i = 0; i < 4; ++i) {
    u_new[i] = u[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] +
                           a75 * k5[i] + a76 * k6[i]);
  }
  const Vec k7 = f(u_new);

  double sum = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const double err = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                            e6 * k6[i] + e7 * k7[i]);
    const double scale =
        settings.abs_tol + settings.rel_tol * std::max(std::abs(u[i]), std::abs(u_new[i]));
    sum += (err / scale) * (err / scale);
  }

  DenseStep dense{{}, t, h};
  for (std::size_t i = 0; i < 4; ++i) {
    const double diff = u_new[i] - u[i];
    const double bspl = h * k1[i] - diff;
    dense.r[0][i] = u[i];
    dense.r[1][i] = diff;
    dense.r[2][i] = bspl;
    dense.r[3][i] = diff - h * k7[i] - bspl;
    dense.r[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                         d6 * k6[i] + d7 * k7[i]);
  }
  return {u_new, k7, std::sqrt(sum / 4.0), dense};
}

double initial_step(Rhs& f, const Vec& u0, const Vec& f0,
                    const IntegratorSettings& settings, double span) {
  double dnf = 0.0;
  double dny = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const double sk = settings.abs_tol + settings.rel_tol * std::abs(u0[i]);
    dnf += (f0[i] / sk) * (f0[i] / sk);
    dny += (u0[i] / sk) * (u0[i] / sk);
  }
  const double hmax = std::min(settings.max_step, span);
  double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
  h = std::min(h, hmax);
  Vec u1{};
  for (std::size_t i = 0; i < 4; ++i) u1[i] = u0[i] + h * f0[i];
  const Vec f1 = f(u1);
  double der2 = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const double sk = settings.abs_tol + settings.rel_tol * std::abs(u0[i]);
    der2 += ((f1[i] - f0[i]) / sk) * ((f1[i] - f0[i]) / sk);
  }
  der2 = std::sqrt(der2) / h;
  const double der12 = std::max(std::abs(der2), std::sqrt(dnf));
  const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3)
                                   : std::pow(0.01 / der12, 1.0 / 5.0);
  return std::min({100.0 * h, h1, hmax});
}

// Earliest theta in (0, 1] where margin(dense.at(theta)) <= 0, given that it
// holds at theta = 1 and not at theta = 0.
template <class Margin>
double locate_crossing(const DenseStep& dense, Margin&& margin) {
  double lo = 0.0;
  double hi = 1.0;
  const double span = std::abs(dense.h);
  for (int iter = 0; iter < 200 && (hi - lo) * span > 1e-13; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (margin(dense.at(mid)) <= 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

Trajectory run_adaptive(const FlowConfig& config, const IntegratorSettings& settings,
                        const EventSpec& events, double direction) {
  config.validate();
  settings.validate();
  events.validate();

  constexpr double kBeta = 0.04;
  constexpr double kExpo1 = 0.2 - kBeta * 0.75;
  constexpr double kSafe = 0.9;
  constexpr double kFacc1 = 1.0 / 0.2;
  constexpr double kFacc2 = 1.0 / 10.0;

  Rhs f(config);
  const EventMonitor monitor(events, direction);
  const double t_end = direction * settings.t_max;
  const std::vector<double> times = sample_times(t_end, settings.output_dt);
  std::size_t next_time = 0;

  std::vector<Sample> samples;
  samples.reserve(times.size() + 2);
  IntegrationStats stats;

  double t = 0.0;
  Vec u = to_vec(initial_state(config));
  samples.push_back(make_sample(config, t, u));

  auto finish = [&](Termination termination) {
    stats.rhs_evaluations = f.evaluations();
    if (direction < 0.0) std::reverse(samples.begin(), samples.end());
    return Trajectory(config, std::move(samples), termination, stats);
  };

  if (monitor.triggered(u)) {
    return finish({TerminationKind::BlowUpEvent, t,
                   monitor.floor_margin(u) <= 0.0 ? BlowUpTrigger::ScaleFactorFloor
                                                  : BlowUpTrigger::VelocityFloor});
  }

  Vec k1{};
  try {
    k1 = f(u);
  } catch (const OverflowError&) {
    return finish({TerminationKind::BlowUpEvent, t, BlowUpTrigger::Overflow});
  }

  double h = direction * initial_step(f, u, k1, settings, settings.t_max);
  double err_old = 1e-4;
  bool last_rejected = false;

  while (direction * (t_end - t) > 0.0) {
    const double remaining = t_end - t;
    const bool last = std::abs(h) >= std::abs(remaining) * (1.0 - 1e-12);
    const double h_step = last ? remaining : h;

    StepAttempt attempt;
    try {
      attempt = dopri_step(f, t, u, k1, h_step, settings);
    } catch (const OverflowError&) {
      ++stats.rejected_steps;
      h = 0.5 * h_step;
      last_rejected = true;
      if (std::abs(h) < settings.min_step) {
        return finish({TerminationKind::BlowUpEvent, t, BlowUpTrigger::Overflow});
      }
      continue;
    }

    const double err = attempt.error;
    const double fac11 = std::pow(err, kExpo1);
    double h_new;
    if (err <= 1.0 && std::isfinite(err)) {
      const double t_new = last ? t_end : t + h_step;
      ++stats.accepted_steps;
      stats.max_step_first_integral_residual =
          std::max(stats.max_step_first_integral_residual,
                   std::abs(step_residual(attempt.u_new, attempt.k7)));

      if (monitor.triggered(attempt.u_new)) {
        double theta = 1.0;
        BlowUpTrigger trigger = BlowUpTrigger::ScaleFactorFloor;
        if (monitor.floor_margin(attempt.u_new) <= 0.0) {
          theta = locate_crossing(attempt.dense,
                                  [&](const Vec& v) { return monitor.floor_margin(v); });
        }
        if (monitor.velocity_margin(attempt.u_new) <= 0.0) {
          const double theta_v = locate_crossing(
              attempt.dense, [&](const Vec& v) { return monitor.velocity_margin(v); });
          if (theta_v < theta || monitor.floor_margin(attempt.u_new) > 0.0) {
            theta = theta_v;
            trigger = BlowUpTrigger::VelocityFloor;
          }
        }
        const double t_event = t + theta * h_step;
        while (next_time < times.size() &&
               direction * (times[next_time] - t_event) < 0.0) {
          const double th = (times[next_time] - t) / h_step;
          samples.push_back(make_sample(config, times[next_time], attempt.dense.at(th)));
          ++next_time;
        }
        samples.push_back(make_sample(config, t_event, attempt.dense.at(theta)));
        return finish({TerminationKind::BlowUpEvent, t_event, trigger});
      }

      while (next_time < times.size() &&
             direction * (times[next_time] - t_new) <= 0.0) {
        if (times[next_time] == t_new) {
          samples.push_back(make_sample(config, t_new, attempt.u_new));
        } else {
          const double th = (times[next_time] - t) / h_step;
          samples.push_back(make_sample(config, times[next_time], attempt.dense.at(th)));
        }
        ++next_time;
      }

      t = t_new;
      u = attempt.u_new;
      k1 = attempt.k7;

      double fac = fac11 / std::pow(err_old, kBeta);
      fac = std::max(kFacc2, std::min(kFacc1, fac / kSafe));
      h_new = h_step / fac;
      err_old = std::max(err, 1e-4);
      if (last_rejected) {
        h_new = direction * std::min(std::abs(h_new), std::abs(h_step));
      }
      last_rejected = false;
      if (last) break;
    } else {
      ++stats.rejected_steps;
      const double shrink = std::isfinite(err) ? std::min(kFacc1, fac11 / kSafe) : kFacc1;
      h_new = h_step / shrink;
      last_rejected = true;
    }

    if (std::abs(h_new) > settings.max_step) h_new = direction * settings.max_step;
    if (std::abs(h_new) < settings.min_step) {
      return finish({TerminationKind::StepSizeCollapse, t, std::nullopt});
    }
    h = h_new;
  }

  return finish({TerminationKind::ReachedHorizon, t_end, std::nullopt});
}

Vec rk4_step(Rhs& f, const Vec& u, const Vec& k1, double h) {
  Vec tmp{};
  for (std::size_t i = 0; i < 4; ++i) tmp[i] = u[i] + 0.5 * h * k1[i];
  const Vec k2 = f(tmp);
  for (std::size_t i = 0; i < 4; ++i) tmp[i] = u[i] + 0.5 * h * k2[i];
  const Vec k3 = f(tmp);
  for (std::size_t i = 0; i < 4; ++i) tmp[i] = u[i] + h * k3[i];
  const Vec k4 = f(tmp);
  Vec out{};
  for (std::size_t i = 0; i < 4; ++i) {
    out[i] = u[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return out;
}

}  // namespace

void IntegratorSettings::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) {
    throw PreconditionError("tolerances must be positive");
  }
  if (!(min_step > 0.0) || !(min_step < max_step)) {
    throw PreconditionError("step bounds must satisfy 0 < min_step < max_step");
  }
  if (!(t_max > 0.0) || !std::isfinite(t_max)) {
    throw PreconditionError("t_max must be finite and positive");
  }
  if (!(output_dt > 0.0) || !std::isfinite(output_dt)) {
    throw PreconditionError("output_dt must be finite and positive");
  }
}

void EventSpec::validate() const {
  if (!(y_floor < 0.0) || !(velocity_floor < 0.0)) {
    throw PreconditionError("event floors must be negative");
  }
}

std::string_view to_string(TerminationKind kind) {
  switch (kind) {
    case TerminationKind::ReachedHorizon: return "ReachedHorizon";
    case TerminationKind::BlowUpEvent: return "BlowUpEvent";
    case TerminationKind::StepSizeCollapse: return "StepSizeCollapse";
  }
  return "unknown";
}

std::string_view to_string(BlowUpTrigger trigger) {
  switch (trigger) {
    case BlowUpTrigger::ScaleFactorFloor: return "ScaleFactorFloor";
    case BlowUpTrigger::VelocityFloor: return "VelocityFloor";
    case BlowUpTrigger::Overflow: return "Overflow";
  }
  return "unknown";
}

Trajectory::Trajectory(FlowConfig config, std::vector<Sample> samples,
                       Termination termination, IntegrationStats stats)
    : config_(config),
      samples_(std::move(samples)),
      termination_(termination),
      stats_(stats) {}

double Trajectory::max_abs_ham_residual() const {
  double worst = 0.0;
  for (const Sample& s : samples_) worst = std::max(worst, std::abs(s.obs.ham_residual));
  return worst;
}

double Trajectory::max_abs_first_integral_residual() const {
  double worst = 0.0;
  for (const Sample& s : samples_) {
    worst = std::max(worst, std::abs(s.obs.first_integral_residual));
  }
  return worst;
}

Trajectory integrate(const FlowConfig& config, const IntegratorSettings& settings,
                     const EventSpec& events) {
  return run_adaptive(config, settings, events, 1.0);
}

Trajectory backward_integrate(const FlowConfig& config,
                              const IntegratorSettings& settings,
                              const EventSpec& events) {
  if (config.sign != CurvatureSign::Positive) {
    throw PreconditionError(
        "backward integration requires time-symmetric (positive-curvature) data");
  }
  return run_adaptive(config, settings, events, -1.0);
}

Trajectory integrate_oracle(const FlowConfig& config, double dt, double t_max,
                            const EventSpec& events, double output_dt) {
  config.validate();
  events.validate();
  if (!(dt > 0.0) || !std::isfinite(dt)) throw PreconditionError("dt must be positive");
  if (!(t_max > 0.0) || !std::isfinite(t_max)) {
    throw PreconditionError("t_max must be finite and positive");
  }
  if (!(output_dt > 0.0)) throw PreconditionError("output_dt must be positive");

  Rhs f(config);
  const EventMonitor monitor(events, 1.0);
  const auto stride =
      std::max<long long>(1, std::llround(output_dt / dt));
  const auto steps = static_cast<long long>(std::ceil(t_max / dt - 1e-9));

  std::vector<Sample> samples;
  IntegrationStats stats;
  Vec u = to_vec(initial_state(config));
  double t = 0.0;
  samples.push_back(make_sample(config, t, u));

  auto finish = [&](Termination termination) {
    stats.rhs_evaluations = f.evaluations();
    return Trajectory(config, std::move(samples), termination, stats);
  };

  Vec k1{};
  try {
    k1 = f(u);
  } catch (const OverflowError&) {
    return finish({TerminationKind::BlowUpEvent, t, BlowUpTrigger::Overflow});
  }

  for (long long k = 1; k <= steps; ++k) {
    const double t_new = k == steps ? t_max : static_cast<double>(k) * dt;
    const double h = t_new - t;
    Vec u_new{};
    try {
      u_new = rk4_step(f, u, k1, h);
    } catch (const OverflowError&) {
      return finish({TerminationKind::BlowUpEvent, t, BlowUpTrigger::Overflow});
    }
    ++stats.accepted_steps;

    if (monitor.triggered(u_new)) {
      double lo = 0.0;
      double hi = h;
      Vec u_hi = u_new;
      while (hi - lo > 1e-13) {
        const double mid = 0.5 * (lo + hi);
        try {
          const Vec u_mid = rk4_step(f, u, k1, mid);
          if (monitor.triggered(u_mid)) {
            hi = mid;
            u_hi = u_mid;
          } else {
            lo = mid;
          }
        } catch (const OverflowError&) {
          hi = mid;
        }
      }
      const BlowUpTrigger trigger = monitor.floor_margin(u_hi) <= 0.0
                                        ? BlowUpTrigger::ScaleFactorFloor
                                        : BlowUpTrigger::VelocityFloor;
      samples.push_back(make_sample(config, t + hi, u_hi));
      return finish({TerminationKind::BlowUpEvent, t + hi, trigger});
    }

    try {
      k1 = f(u_new);
    } catch (const OverflowError&) {
      return finish({TerminationKind::BlowUpEvent, t, BlowUpTrigger::Overflow});
    }
    stats.max_step_first_integral_residual = std::max(
        stats.max_step_first_integral_residual, std::abs(step_residual(u_new, k1)));

    t = t_new;
    u = u_new;
    if (k % stride == 0 || k == steps) samples.push_back(make_sample(config, t, u));
  }
  return finish({TerminationKind::ReachedHorizon, t_max, std::nullopt});
}

}  // namespace efl
