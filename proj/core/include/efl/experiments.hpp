#pragma once

// Drivers built on the integrator: recollapse classification, bisection for
// the critical coupling, late-time limits of x - y, reduced-Hamiltonian
// audits and parameter sweeps.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "efl/integrator.hpp"

namespace efl {

// "Complete" only means no blow-up event was seen before the horizon.
enum class Verdict { CompleteWithinHorizon, Recollapse };

std::string_view to_string(Verdict verdict);

struct ClassificationDiagnostics {
  double max_constraint_residual = 0.0;        // over output samples
  double max_step_first_integral_residual = 0.0;  // over accepted steps
  TerminationKind termination = TerminationKind::ReachedHorizon;
  std::optional<BlowUpTrigger> trigger;
  std::size_t accepted_steps = 0;
  // s within kLowConfidenceBand of an analytic threshold, or the run ended
  // in StepSizeCollapse.
  bool low_confidence = false;
};

struct Classification {
  Verdict verdict = Verdict::CompleteWithinHorizon;
  std::optional<double> t_blowup;  // present iff Recollapse
  double horizon = 0.0;
  ClassificationDiagnostics diagnostics;
};

inline constexpr double kLowConfidenceBand = 1e-3;
inline constexpr double kDefaultHorizon = 50.0;

// Integrator settings used by the drivers: rel_tol 1e-12, abs_tol 1e-14,
// output every 0.05. Near blow-up |x'+y'| reaches 100 and the first-integral
// residual scales like |x'+y'| times the local velocity error, so the library
// default of 1e-10 is too loose to hold that residual below 1e-7.
IntegratorSettings classification_settings(double horizon);

Classification classify(const FlowConfig& config, double horizon = kDefaultHorizon,
                        const EventSpec& events = {});

struct BisectionResult {
  double s_lo = 0.0;
  double s_hi = 0.0;
  int iterations = 0;
  double horizon_used = 0.0;
  Verdict verdict_lo = Verdict::CompleteWithinHorizon;
  Verdict verdict_hi = Verdict::Recollapse;

  double midpoint() const { return 0.5 * (s_lo + s_hi); }
  double width() const { return s_hi - s_lo; }
};

// Bisection on the classification predicate (positive-curvature family only).
// Throws BracketError when both endpoints classify identically and
// PreconditionError for invalid arguments.
BisectionResult bisect_critical(int n, CurvatureSign sign, double s_lo, double s_hi,
                                double tol, double horizon);

struct LimitEstimate {
  double value = 0.0;           // x(horizon) - y(horizon)
  double volume_ratio = 0.0;    // C_s with the configured base volumes
  double tail_variation = 0.0;  // max - min of x - y over the last 20% of samples
  std::optional<double> decay_rate;  // slope of log|x' - y'|; absent if x' == y'
  double cross_check_delta = 0.0;    // |value - value from the RK4 oracle|
};

inline constexpr double kOracleStep = 1e-4;

// Throws RegimeError outside the convergent regime or on recollapse.
LimitEstimate limit_Cs(const FlowConfig& config, double horizon = 40.0);

// Least-squares slope of log|x' - y'| over the final half of the samples with
// |x' - y'| > 1e-13. nullopt when fewer than two such samples exist.
std::optional<double> fit_decay_rate(const std::vector<Sample>& samples);

enum class MonotonicityVerdict {
  Constant,
  MonotoneNonIncreasing,
  MonotoneNonDecreasing,
  NonMonotone,
};

std::string_view to_string(MonotonicityVerdict verdict);

struct AuditPoint {
  double t;
  double h_red;
};

struct HamiltonianAudit {
  HamiltonianBranch branch = HamiltonianBranch::OutOfRange;
  std::vector<AuditPoint> series;
  MonotonicityVerdict verdict = MonotonicityVerdict::Constant;
  double relative_variation = 0.0;  // (max - min) / |h_red(0)|
  int empirical_sign = 0;           // sign of h_red(end) - h_red(0)
  std::size_t increases = 0;        // steps above the noise floor
  std::size_t decreases = 0;
  Termination termination;
};

inline constexpr double kConstantTolerance = 1e-6;
// Relative per-sample change treated as integration noise.
inline constexpr double kAuditNoiseFloor = 1e-9;

// h_red along the trajectory on the branch selected at t = 0, up to the
// horizon or the blow-up event. Throws GaugeRangeError at the first sample
// that leaves that branch.
HamiltonianAudit hamiltonian_audit(const FlowConfig& config, double horizon);

// Verdict logic used by the audit, exposed for testing.
MonotonicityVerdict monotonicity_verdict(std::span<const AuditPoint> series,
                                         double constant_tol, double noise_floor,
                                         std::size_t* increases = nullptr,
                                         std::size_t* decreases = nullptr);

struct SweepRow {
  double s = 0.0;
  std::optional<Classification> classification;
  std::optional<LimitEstimate> limit;
  std::optional<std::string> error;
};

// Rows are independent and computed on up to `threads` worker threads
// (0 = hardware concurrency). Output order follows s_grid.
std::vector<SweepRow> sweep(int n, CurvatureSign sign, std::span<const double> s_grid,
                            double horizon, unsigned threads = 0);

// True when the configuration lies in the regime where x - y converges.
bool in_convergent_regime(const FlowConfig& config);

}  // namespace efl
