// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 on any failure.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "efl/cli.hpp"
#include "efl/core_models.hpp"
#include "efl/experiments.hpp"
#include "efl/integrator.hpp"

using namespace efl;

namespace {

constexpr auto kPos = CurvatureSign::Positive;
constexpr auto kNeg = CurvatureSign::Negative;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* pattern, auto... values) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), pattern, values...);
  return buf;
}

FlowConfig cfg(int n, CurvatureSign sign, double s) {
  return FlowConfig::from_dimension(n, sign, s);
}

IntegratorSettings window(double t_max) {
  IntegratorSettings s;
  s.t_max = t_max;
  return s;
}

// Largest constraint residual seen by criteria 1-5; read by criterion 7.
double g_max_constraint = 0.0;
int g_constraint_runs = 0;

void record(double residual) {
  g_max_constraint = std::max(g_max_constraint, residual);
  ++g_constraint_runs;
}

// Largest first-integral residual over accepted steps of criterion 3; read by criterion 6.
double g_max_first_integral = 0.0;

double closed_form_error(const Trajectory& tr, const std::function<double(double)>& exact) {
  double worst = 0.0;
  for (const Sample& s : tr.samples()) {
    worst = std::max(worst, std::abs(s.state.x - exact(s.state.t)));
  }
  return worst;
}

Outcome de_sitter() {
  double worst = 0.0;
  bool reached = true;
  for (int n : {2, 4}) {
    const Trajectory tr = integrate(cfg(n, kPos, 1.0), window(10.0));
    reached = reached && tr.termination().kind == TerminationKind::ReachedHorizon;
    worst = std::max(worst, closed_form_error(tr, [](double t) { return std::log(std::cosh(t)); }));
    record(tr.max_abs_ham_residual());
  }
  return {reached && worst <= 1e-8, fmt("max |x - log cosh t| = %.3e", worst)};
}

Outcome negative_background() {
  const Trajectory tr = integrate(cfg(4, kNeg, 1.0), window(10.0));
  const double worst = closed_form_error(
      tr, [](double t) { return std::log(std::sinh(t + std::asinh(1.0))); });
  record(tr.max_abs_ham_residual());
  return {tr.termination().kind == TerminationKind::ReachedHorizon && worst <= 1e-8,
          fmt("max |x - log sinh(t + asinh 1)| = %.3e", worst)};
}

Outcome threshold_classification() {
  const std::vector<double> recollapse{0.6, 0.74, 1.51, 2.0, 3.0, 5.0};
  const std::vector<double> complete{0.76, 1.0, 1.25, 1.49, 1.5};
  int wrong = 0;
  std::string misses;
  auto check = [&](double s, Verdict expected) {
    const Classification c = classify(cfg(4, kPos, s), 50.0);
    record(c.diagnostics.max_constraint_residual);
    g_max_first_integral =
        std::max(g_max_first_integral, c.diagnostics.max_step_first_integral_residual);
    if (c.verdict != expected) {
      ++wrong;
      misses += fmt(" s=%g", s);
    }
  };
  for (double s : recollapse) check(s, Verdict::Recollapse);
  for (double s : complete) check(s, Verdict::CompleteWithinHorizon);
  return {wrong == 0, fmt("11 runs, %d misclassified%s", wrong, misses.c_str())};
}

Outcome bisection() {
  const BisectionResult up = bisect_critical(4, kPos, 1.4, 1.6, 1e-4, 80.0);
  const BisectionResult low = bisect_critical(4, kPos, 0.6, 0.9, 1e-4, 80.0);
  const BisectionResult six = bisect_critical(6, kPos, 1.2, 1.35, 1e-4, 80.0);
  // Constraint check on the runs closest to each threshold.
  for (const auto& [n, r] : {std::pair{4, up}, std::pair{4, low}, std::pair{6, six}}) {
    record(classify(cfg(n, kPos, r.s_lo), 80.0).diagnostics.max_constraint_residual);
    record(classify(cfg(n, kPos, r.s_hi), 80.0).diagnostics.max_constraint_residual);
  }
  const bool pass = std::abs(up.midpoint() - 1.5) <= 1e-2 &&
                    std::abs(low.midpoint() - 0.75) <= 1e-2 &&
                    std::abs(six.midpoint() - 1.25) <= 1e-2 && up.width() <= 1e-4 &&
                    low.width() <= 1e-4 && six.width() <= 1e-4;
  return {pass, fmt("n=4 upper [%.6f, %.6f], lower [%.6f, %.6f]; n=6 upper [%.6f, %.6f]",
                    up.s_lo, up.s_hi, low.s_lo, low.s_hi, six.s_lo, six.s_hi)};
}

Outcome negative_completeness() {
  int complete = 0;
  for (double s : {0.6, 1.0, 3.0}) {
    const Classification c = classify(cfg(4, kNeg, s), 50.0);
    record(c.diagnostics.max_constraint_residual);
    complete += c.verdict == Verdict::CompleteWithinHorizon;
  }
  return {complete == 3, fmt("%d/3 CompleteWithinHorizon", complete)};
}

Outcome first_integral() {
  return {g_max_first_integral <= 1e-7,
          fmt("max over accepted steps = %.3e", g_max_first_integral)};
}

Outcome hamiltonian_constraint() {
  return {g_max_constraint <= 1e-6,
          fmt("max over %d runs = %.3e", g_constraint_runs, g_max_constraint)};
}

Outcome reduced_hamiltonian() {
  const HamiltonianAudit neg = hamiltonian_audit(cfg(4, kNeg, 1.0), 50.0);
  const HamiltonianAudit mono = hamiltonian_audit(cfg(4, kNeg, 1.3), 50.0);
  // The Positive run leaves |tau| < n to rounding as tau -> -n; audit the range it stays in.
  const HamiltonianAudit pos = hamiltonian_audit(cfg(4, kPos, 1.0), 10.0);
  const bool one_sided = mono.verdict == MonotonicityVerdict::MonotoneNonIncreasing ||
                         mono.verdict == MonotonicityVerdict::MonotoneNonDecreasing;
  const bool pass = neg.verdict == MonotonicityVerdict::Constant &&
                    neg.relative_variation <= 1e-6 &&
                    std::abs(neg.series.front().h_red - 16.0) <= 16e-6 && one_sided &&
                    pos.verdict == MonotonicityVerdict::Constant &&
                    pos.relative_variation <= 1e-6 &&
                    std::abs(pos.series.front().h_red - 16.0) <= 16e-6;
  return {pass, fmt("negative s=1 %s (rel var %.1e); s=1.3 %s (%.4f -> %.4f); "
                    "positive s=1 %s (rel var %.1e)",
                    std::string(to_string(neg.verdict)).c_str(), neg.relative_variation,
                    std::string(to_string(mono.verdict)).c_str(), mono.series.front().h_red,
                    mono.series.back().h_red, std::string(to_string(pos.verdict)).c_str(),
                    pos.relative_variation)};
}

Outcome limit_cs() {
  bool pass = true;
  std::string detail;
  for (auto sign : {kPos, kNeg}) {
    const LimitEstimate e = limit_Cs(cfg(4, sign, 1.3), 40.0);
    pass = pass && e.tail_variation <= 1e-6 && e.decay_rate && *e.decay_rate < 0.0 &&
           e.cross_check_delta <= 1e-6;
    detail += fmt("%s: C=%.10f var=%.1e rate=%.3f delta=%.1e; ",
                  std::string(to_string(sign)).c_str(), e.value, e.tail_variation,
                  e.decay_rate.value_or(NAN), e.cross_check_delta);
  }
  detail.resize(detail.size() - 2);
  return {pass, detail};
}

Outcome boundary_case() {
  const Trajectory tr = integrate(cfg(4, kPos, 1.5), window(30.0));
  double worst = 0.0;
  for (const Sample& s : tr.samples()) worst = std::max(worst, std::abs(s.state.y));
  return {tr.termination().kind == TerminationKind::ReachedHorizon && worst <= 1e-8,
          fmt("max |y| = %.3e", worst)};
}

Outcome time_symmetry() {
  const FlowConfig c = cfg(4, kPos, 2.0);
  const Trajectory f = integrate(c);
  const Trajectory b = backward_integrate(c);
  const bool events = f.termination().kind == TerminationKind::BlowUpEvent &&
                      b.termination().kind == TerminationKind::BlowUpEvent;
  const double gap = std::abs(b.termination().t + f.termination().t);
  return {events && gap <= 1e-5, fmt("forward %.10f, backward %.10f, |sum| = %.3e",
                                     f.termination().t, b.termination().t, gap)};
}

Outcome rescaled_fixed_point() {
  double worst = 0.0;
  int points = 0;
  for (int n : {2, 3, 4}) {
    for (auto sign : {kNeg, kPos}) {
      for (int i = 1; i <= 10; ++i) {
        const RescaledResidual r = rescaled_background_residual(n, sign, 0.5 * i);
        worst = std::max({worst, std::abs(r.metric), std::abs(r.sigma)});
        ++points;
      }
    }
  }
  return {points == 60 && worst <= 1e-12, fmt("%d points, max residual %.3e", points, worst)};
}

Outcome oracle_agreement() {
  const FlowConfig c = cfg(4, kPos, 1.2);
  const Trajectory a = integrate(c, window(20.0));
  const Trajectory o = integrate_oracle(c, 1e-4, 20.0);
  if (a.samples().size() != o.samples().size()) return {false, "sample grids differ"};
  double worst = 0.0;
  for (std::size_t i = 0; i < a.samples().size(); ++i) {
    const FlowState& p = a.samples()[i].state;
    const FlowState& q = o.samples()[i].state;
    worst = std::max({worst, std::abs(p.x - q.x), std::abs(p.y - q.y), std::abs(p.xp - q.xp),
                      std::abs(p.yp - q.yp)});
  }
  return {worst <= 1e-6, fmt("%zu samples, max state deviation %.3e", a.samples().size(), worst)};
}

Outcome determinism() {
  const std::vector<std::string> args{"efl",    "simulate",    "--n",      "4",
                                      "--s",    "1.7",         "--curvature", "positive",
                                      "--t-max", "50"};
  std::ostringstream a, b, ea, eb;
  const int ca = cli::run(args, a, ea);
  const int cb = cli::run(args, b, eb);
  const bool same = a.str() == b.str() && !a.str().empty();
  return {ca == 0 && cb == 0 && same,
          fmt("two runs, %zu CSV bytes each, %s", a.str().size(), same ? "identical" : "differ")};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*check)();
  };
  const Criterion criteria[] = {
      {"de Sitter recovery", de_sitter},
      {"negative background recovery", negative_background},
      {"threshold classification", threshold_classification},
      {"bisection", bisection},
      {"negative-family completeness", negative_completeness},
      {"first integral", first_integral},
      {"Hamiltonian constraint", hamiltonian_constraint},
      {"reduced Hamiltonian", reduced_hamiltonian},
      {"limit C_s", limit_cs},
      {"boundary case s = (n-1)/(n-2)", boundary_case},
      {"time symmetry", time_symmetry},
      {"rescaled fixed point", rescaled_fixed_point},
      {"oracle agreement", oracle_agreement},
      {"determinism", determinism},
  };
  int failures = 0;
  int index = 0;
  for (const Criterion& c : criteria) {
    ++index;
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", index, c.name, o.detail.c_str());
  }
  std::printf("%d/%d criteria passed\n", index - failures, index);
  return failures == 0 ? 0 : 1;
}
