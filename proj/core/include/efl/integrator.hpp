#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "efl/product_flow.hpp"

namespace efl {

struct IntegratorSettings {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = 0.25;
  double min_step = 1e-13;
  double t_max = 50.0;
  double output_dt = 0.01;

  // Throws PreconditionError.
  void validate() const;
};

// Blow-up detection. A crossing of either floor ends the integration; the
// reported time is the earlier of the two crossings.
struct EventSpec {
  double y_floor = -20.0;          // on min(x, y)
  double velocity_floor = -100.0;  // on x' + y' along the integration direction

  void validate() const;
};

enum class TerminationKind { ReachedHorizon, BlowUpEvent, StepSizeCollapse };
enum class BlowUpTrigger { ScaleFactorFloor, VelocityFloor, Overflow };

std::string_view to_string(TerminationKind kind);
std::string_view to_string(BlowUpTrigger trigger);

struct Termination {
  TerminationKind kind = TerminationKind::ReachedHorizon;
  double t = 0.0;  // horizon, event time, or last safe time
  std::optional<BlowUpTrigger> trigger;
};

struct Sample {
  FlowState state;
  Observables obs;
};

struct IntegrationStats {
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
  std::size_t rhs_evaluations = 0;
  // max |x''+y''+x'^2+y'^2-2| over the end points of all accepted steps
  double max_step_first_integral_residual = 0.0;
};

// Immutable result of one integration. Samples are strictly increasing in t
// (a backward run is stored in increasing order, ending at t = 0).
class Trajectory {
 public:
  Trajectory(FlowConfig config, std::vector<Sample> samples,
             Termination termination, IntegrationStats stats);

  const FlowConfig& config() const noexcept { return config_; }
  const std::vector<Sample>& samples() const noexcept { return samples_; }
  const Termination& termination() const noexcept { return termination_; }
  const IntegrationStats& stats() const noexcept { return stats_; }

  double max_abs_ham_residual() const;
  double max_abs_first_integral_residual() const;

 private:
  FlowConfig config_;
  std::vector<Sample> samples_;
  Termination termination_;
  IntegrationStats stats_;
};

// Adaptive Dormand-Prince 5(4) with PI step control, 4th-order dense output,
// and bisection event location on the interpolant.
Trajectory integrate(const FlowConfig& config,
                     const IntegratorSettings& settings = {},
                     const EventSpec& events = {});

// Same as integrate() but along t -> -t, from 0 to -settings.t_max.
// Positive family only; its initial data are time-symmetric.
Trajectory backward_integrate(const FlowConfig& config,
                              const IntegratorSettings& settings = {},
                              const EventSpec& events = {});

// Classical fixed-step RK4. Samples every round(output_dt/dt) steps. Event
// crossings are bracketed between steps and refined by bisection, taking a
// single RK4 step of the trial length from the last state before the crossing.
Trajectory integrate_oracle(const FlowConfig& config, double dt, double t_max,
                            const EventSpec& events = {},
                            double output_dt = 0.01);

}  // namespace efl
