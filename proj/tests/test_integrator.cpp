#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "efl/errors.hpp"
#include "efl/integrator.hpp"

using namespace efl;

namespace {
FlowConfig cfg(int n, CurvatureSign sign, double s) {
  return FlowConfig::from_dimension(n, sign, s);
}

IntegratorSettings horizon(double t_max, double output_dt = 0.01) {
  IntegratorSettings s;
  s.t_max = t_max;
  s.output_dt = output_dt;
  return s;
}

// Max state deviation at common sample times.
double max_deviation(const Trajectory& a, const Trajectory& b) {
  const auto& sa = a.samples();
  const auto& sb = b.samples();
  const std::size_t count = std::min(sa.size(), sb.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    EXPECT_NEAR(sa[i].state.t, sb[i].state.t, 1e-9);
    worst = std::max({worst, std::abs(sa[i].state.x - sb[i].state.x),
                      std::abs(sa[i].state.y - sb[i].state.y),
                      std::abs(sa[i].state.xp - sb[i].state.xp),
                      std::abs(sa[i].state.yp - sb[i].state.yp)});
  }
  return worst;
}
}  // namespace

TEST(Settings, Validation) {
  IntegratorSettings s;
  s.rel_tol = 0.0;
  EXPECT_THROW(s.validate(), PreconditionError);
  s = {};
  s.output_dt = -1.0;
  EXPECT_THROW(s.validate(), PreconditionError);
  EventSpec e;
  e.y_floor = 1.0;
  EXPECT_THROW(e.validate(), PreconditionError);
}

TEST(Integrate, DeSitterClosedForm) {
  for (int n : {2, 4}) {
    const Trajectory tr = integrate(cfg(n, CurvatureSign::Positive, 1.0), horizon(10.0));
    EXPECT_EQ(tr.termination().kind, TerminationKind::ReachedHorizon);
    EXPECT_DOUBLE_EQ(tr.samples().back().state.t, 10.0);
    double worst = 0.0;
    for (const Sample& s : tr.samples()) {
      worst = std::max(worst, std::abs(s.state.x - std::log(std::cosh(s.state.t))));
    }
    EXPECT_LE(worst, 1e-8) << "n = " << n;
  }
}

TEST(Integrate, NegativeBackgroundClosedForm) {
  const Trajectory tr = integrate(cfg(4, CurvatureSign::Negative, 1.0), horizon(10.0));
  EXPECT_EQ(tr.termination().kind, TerminationKind::ReachedHorizon);
  double worst = 0.0;
  for (const Sample& s : tr.samples()) {
    const double exact = std::log(std::sinh(s.state.t + std::asinh(1.0)));
    worst = std::max(worst, std::abs(s.state.x - exact));
  }
  EXPECT_LE(worst, 1e-8);
}

TEST(Integrate, UnitCouplingKeepsFactorsEqual) {
  for (auto sign : {CurvatureSign::Positive, CurvatureSign::Negative}) {
    const Trajectory tr = integrate(cfg(4, sign, 1.0), horizon(20.0));
    for (const Sample& s : tr.samples()) EXPECT_LE(std::abs(s.state.x - s.state.y), 1e-10);
  }
}

TEST(Integrate, RecollapseIsBlowUpEvent) {
  const FlowConfig c = cfg(4, CurvatureSign::Positive, 3.0);
  const Trajectory tr = integrate(c);
  EXPECT_EQ(tr.termination().kind, TerminationKind::BlowUpEvent);
  EXPECT_GT(tr.termination().t, 0.0);
  ASSERT_TRUE(tr.termination().trigger);
  EXPECT_DOUBLE_EQ(tr.samples().back().state.t, tr.termination().t);
  // x increases and y decreases up to blow-up.
  for (std::size_t i = 1; i < tr.samples().size(); ++i) {
    EXPECT_GT(tr.samples()[i].state.xp, 0.0);
    EXPECT_LT(tr.samples()[i].state.yp, 0.0);
  }
}

TEST(Integrate, ConstraintsHoldInEquilibriumRegime) {
  for (double s : {1.1, 1.3, 1.45}) {
    const Trajectory tr = integrate(cfg(4, CurvatureSign::Positive, s), horizon(50.0));
    EXPECT_EQ(tr.termination().kind, TerminationKind::ReachedHorizon);
    EXPECT_LE(tr.stats().max_step_first_integral_residual, 1e-7) << "s = " << s;
    EXPECT_LE(tr.max_abs_ham_residual(), 1e-6) << "s = " << s;
    EXPECT_EQ(tr.samples().front().obs.tau, 0.0);
    for (std::size_t i = 1; i < tr.samples().size(); ++i) {
      const FlowState& st = tr.samples()[i].state;
      EXPECT_GT(st.xp, 0.0);
      EXPECT_GT(st.yp, 0.0);
    }
  }
}

TEST(Integrate, NegativeStaysInStandardGauge) {
  for (double s : {0.6, 1.3, 3.0}) {
    const Trajectory tr = integrate(cfg(4, CurvatureSign::Negative, s), horizon(20.0));
    // tau + n ~ e^{-2t} drops below the resolution of n near t = 18.
    for (const Sample& smp : tr.samples()) {
      EXPECT_LE(smp.obs.tau, -4.0);
      if (smp.state.t <= 10.0) EXPECT_LT(smp.obs.tau, -4.0);
    }
  }
}

TEST(Integrate, Deterministic) {
  const FlowConfig c = cfg(4, CurvatureSign::Positive, 1.7);
  const Trajectory a = integrate(c);
  const Trajectory b = integrate(c);
  ASSERT_EQ(a.samples().size(), b.samples().size());
  for (std::size_t i = 0; i < a.samples().size(); ++i) {
    EXPECT_EQ(a.samples()[i].state.x, b.samples()[i].state.x);
    EXPECT_EQ(a.samples()[i].state.yp, b.samples()[i].state.yp);
  }
  EXPECT_EQ(a.termination().t, b.termination().t);
}

TEST(Oracle, ClosedFormAtLargeStep) {
  const Trajectory tr = integrate_oracle(cfg(2, CurvatureSign::Positive, 1.0), 1e-3, 5.0);
  const FlowState& last = tr.samples().back().state;
  EXPECT_NEAR(last.t, 5.0, 1e-12);
  EXPECT_LE(std::abs(last.x - std::log(std::cosh(5.0))), 1e-8);
}

TEST(Oracle, BoundaryCouplingKeepsSecondFactorFixed) {
  const Trajectory tr = integrate_oracle(cfg(4, CurvatureSign::Positive, 1.5), 1e-3, 30.0);
  for (const Sample& s : tr.samples()) EXPECT_LE(std::abs(s.state.y), 1e-8);
}

TEST(Oracle, AgreesWithAdaptive) {
  const FlowConfig c = cfg(4, CurvatureSign::Positive, 1.2);
  const Trajectory adaptive = integrate(c, horizon(20.0, 0.1));
  const Trajectory oracle = integrate_oracle(c, 1e-4, 20.0, {}, 0.1);
  ASSERT_EQ(adaptive.samples().size(), oracle.samples().size());
  EXPECT_LE(max_deviation(adaptive, oracle), 1e-6);
}

TEST(Oracle, TighterToleranceNeverWorse) {
  const FlowConfig c = cfg(4, CurvatureSign::Positive, 1.3);
  const Trajectory oracle = integrate_oracle(c, 1e-4, 20.0, {}, 0.5);
  double previous = INFINITY;
  for (double rel : {1e-7, 5e-8, 2.5e-8, 1.25e-8}) {
    IntegratorSettings s = horizon(20.0, 0.5);
    s.rel_tol = rel;
    s.abs_tol = rel * 1e-2;
    const double dev = max_deviation(integrate(c, s), oracle);
    EXPECT_LE(dev, previous) << "rel_tol = " << rel;
    previous = dev;
  }
}

TEST(Oracle, BlowUpTimesAgree) {
  for (double s : {2.0, 3.0, 5.0}) {
    const FlowConfig c = cfg(4, CurvatureSign::Positive, s);
    const Trajectory a = integrate(c);
    const Trajectory o = integrate_oracle(c, 1e-4, 50.0);
    ASSERT_EQ(a.termination().kind, TerminationKind::BlowUpEvent);
    ASSERT_EQ(o.termination().kind, TerminationKind::BlowUpEvent);
    EXPECT_NEAR(a.termination().t, o.termination().t, 1e-5) << "s = " << s;
  }
}

TEST(Backward, NegativeRejected) {
  EXPECT_THROW(backward_integrate(cfg(4, CurvatureSign::Negative, 1.0)), PreconditionError);
}

TEST(Backward, BlowUpTimeNegated) {
  const FlowConfig c = cfg(4, CurvatureSign::Positive, 2.0);
  const Trajectory f = integrate(c);
  const Trajectory b = backward_integrate(c);
  ASSERT_EQ(b.termination().kind, TerminationKind::BlowUpEvent);
  EXPECT_NEAR(b.termination().t, -f.termination().t, 1e-8);
}

TEST(Backward, MirrorsForwardTrajectory) {
  const FlowConfig c = cfg(6, CurvatureSign::Positive, 1.1);
  const Trajectory f = integrate(c, horizon(10.0, 0.1));
  const Trajectory b = backward_integrate(c, horizon(10.0, 0.1));
  ASSERT_EQ(f.samples().size(), b.samples().size());
  const std::size_t n = f.samples().size();
  for (std::size_t i = 0; i < n; ++i) {
    const FlowState& fw = f.samples()[i].state;
    const FlowState& bw = b.samples()[n - 1 - i].state;
    EXPECT_NEAR(bw.t, -fw.t, 1e-12);
    EXPECT_LE(std::abs(bw.x - fw.x), 1e-8);
    EXPECT_LE(std::abs(bw.y - fw.y), 1e-8);
  }
  const Trajectory d = backward_integrate(cfg(4, CurvatureSign::Positive, 1.0), horizon(3.0));
  EXPECT_NEAR(d.samples().front().state.t, -3.0, 1e-12);
  EXPECT_NEAR(d.samples().front().state.x, std::log(std::cosh(3.0)), 1e-8);
}

TEST(Integrate, TinyStepBudgetCollapses) {
  IntegratorSettings s = horizon(5.0);
  s.max_step = 2e-3;
  s.min_step = 1e-3;
  s.rel_tol = 1e-15;
  s.abs_tol = 1e-17;
  const Trajectory tr = integrate(cfg(4, CurvatureSign::Positive, 3.0), s);
  EXPECT_EQ(tr.termination().kind, TerminationKind::StepSizeCollapse);
}
