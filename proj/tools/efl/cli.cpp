#include "efl/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include "efl/errors.hpp"
#include "efl/experiments.hpp"
#include "efl/format.hpp"
#include "efl/version.hpp"

namespace efl::cli {

namespace {

// Thrown for flag values that parse but are out of range.
struct InvalidFlags : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FlowFlags {
  int n = 0;
  double s = 1.0;
  std::string curvature;
  double vol_m = 1.0;
  double vol_n = 1.0;
};

struct EventFlags {
  double y_floor = EventSpec{}.y_floor;
  double velocity_floor = EventSpec{}.velocity_floor;
};

struct SimulateFlags {
  FlowFlags flow;
  EventFlags events;
  IntegratorSettings settings;
  std::string out;
  bool backward = false;
};

struct ClassifyFlags {
  FlowFlags flow;
  EventFlags events;
  double horizon = kDefaultHorizon;
};

struct BisectFlags {
  int n = 0;
  std::string curvature;
  double lo = 0.0;
  double hi = 0.0;
  double tol = 1e-4;
  double horizon = kDefaultHorizon;
};

struct SweepFlags {
  int n = 0;
  std::string curvature;
  double s_min = 0.0;
  double s_max = 0.0;
  int steps = 0;
  std::vector<double> s_values;
  double horizon = kDefaultHorizon;
};

struct HamiltonianFlags {
  FlowFlags flow;
  double horizon = kDefaultHorizon;
};

struct BackgroundFlags {
  int n = 0;
  std::string curvature;
  std::optional<double> t;
  std::optional<double> rescaled_t;
};

void add_flow_options(CLI::App* cmd, FlowFlags& flags) {
  cmd->add_option("--n", flags.n, "Spatial dimension (even, >= 2)")->required();
  cmd->add_option("--s", flags.s, "Coupling parameter s > 1/2")->required();
  cmd->add_option("--curvature", flags.curvature, "positive | negative")
      ->required()
      ->check(CLI::IsMember({"positive", "negative"}));
  cmd->add_option("--vol-m", flags.vol_m, "vol(M, g_M)")->capture_default_str();
  cmd->add_option("--vol-n", flags.vol_n, "vol(N, g_N)")->capture_default_str();
}

void add_event_options(CLI::App* cmd, EventFlags& flags) {
  cmd->add_option("--y-floor", flags.y_floor, "Blow-up floor on min(x, y)")
      ->capture_default_str();
  cmd->add_option("--velocity-floor", flags.velocity_floor, "Blow-up floor on x' + y'")
      ->capture_default_str();
}

CurvatureSign sign_of(const std::string& text) { return parse_curvature_sign(text); }

template <class Fn>
auto validated(Fn&& fn) {
  try {
    return fn();
  } catch (const PreconditionError& e) {
    throw InvalidFlags(e.what());
  } catch (const DomainError& e) {
    throw InvalidFlags(e.what());
  }
}

FlowConfig to_config(const FlowFlags& flags) {
  return validated([&] {
    return FlowConfig::from_dimension(flags.n, sign_of(flags.curvature), flags.s,
                                      flags.vol_m, flags.vol_n);
  });
}

EventSpec to_events(const EventFlags& flags) {
  EventSpec events{flags.y_floor, flags.velocity_floor};
  validated([&] {
    events.validate();
    return 0;
  });
  return events;
}

Json flow_json(const FlowConfig& c) {
  return Json{{"n", c.n()},
              {"m", c.m},
              {"curvature", std::string(to_string(c.sign))},
              {"s", c.s},
              {"vol_M", c.vol_M},
              {"vol_N", c.vol_N}};
}

Json flow_flags_json(const FlowFlags& f) {
  return Json{{"n", f.n},         {"s", f.s},         {"curvature", f.curvature},
              {"vol-m", f.vol_m}, {"vol-n", f.vol_n}};
}

Json settings_json(const IntegratorSettings& s) {
  return Json{{"rel_tol", s.rel_tol},     {"abs_tol", s.abs_tol},
              {"max_step", s.max_step},   {"min_step", s.min_step},
              {"t_max", s.t_max},         {"output_dt", s.output_dt}};
}

Json events_json(const EventSpec& e) {
  return Json{{"y_floor", e.y_floor}, {"velocity_floor", e.velocity_floor}};
}

Json optional_number(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

Json termination_json(const Termination& term) {
  return Json{{"kind", std::string(to_string(term.kind))},
              {"t", term.t},
              {"trigger", term.trigger ? Json(std::string(to_string(*term.trigger)))
                                       : Json(nullptr)}};
}

Json classification_json(const Classification& c) {
  return Json{{"verdict", std::string(to_string(c.verdict))},
              {"t_blowup", optional_number(c.t_blowup)},
              {"horizon", c.horizon}};
}

Json classification_diagnostics_json(const ClassificationDiagnostics& d) {
  return Json{{"max_constraint_residual", d.max_constraint_residual},
              {"max_step_first_integral_residual", d.max_step_first_integral_residual},
              {"termination", std::string(to_string(d.termination))},
              {"trigger",
               d.trigger ? Json(std::string(to_string(*d.trigger))) : Json(nullptr)},
              {"accepted_steps", d.accepted_steps},
              {"low_confidence", d.low_confidence}};
}

Json limit_json(const FlowConfig& config, const LimitEstimate& e) {
  (void)config;
  return Json{{"value", e.value},
              {"volume_ratio", e.volume_ratio},
              {"tail_variation", e.tail_variation},
              {"decay_rate", optional_number(e.decay_rate)},
              {"cross_check_delta", e.cross_check_delta}};
}

Json thresholds_json(int n) {
  return Json{{"lower", lower_threshold(n)}, {"upper", optional_number(upper_threshold(n))}};
}

std::string_view branch_name(HamiltonianBranch branch) {
  switch (branch) {
    case HamiltonianBranch::Minus: return "minus";
    case HamiltonianBranch::Plus: return "plus";
    case HamiltonianBranch::OutOfRange: return "out_of_range";
  }
  return "out_of_range";
}

class Invocation {
 public:
  Invocation(std::string command, std::ostream& out)
      : command_(std::move(command)), out_(out), start_(std::chrono::steady_clock::now()) {}

  Json manifest(Json flags, Json config) const {
    const auto elapsed = std::chrono::steady_clock::now() - start_;
    return Json{{"command", command_},
                {"tool_version", std::string(kVersion)},
                {"flags", std::move(flags)},
                {"config", std::move(config)},
                {"wall_time_ms",
                 std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count()}};
  }

  void emit(Json result, Json diagnostics, Json manifest) const {
    write_json(out_, Json{{"result", std::move(result)},
                          {"diagnostics", std::move(diagnostics)},
                          {"manifest", std::move(manifest)}});
  }

 private:
  std::string command_;
  std::ostream& out_;
  std::chrono::steady_clock::time_point start_;
};

// ---------------------------------------------------------------------------

int cmd_simulate(const SimulateFlags& flags, std::ostream& out, std::ostream& err) {
  Invocation inv("simulate", out);
  const FlowConfig config = to_config(flags.flow);
  const EventSpec events = to_events(flags.events);
  validated([&] {
    flags.settings.validate();
    return 0;
  });
  if (flags.backward && config.sign != CurvatureSign::Positive) {
    throw InvalidFlags("--backward requires --curvature positive");
  }

  const Trajectory trajectory = flags.backward
                                    ? backward_integrate(config, flags.settings, events)
                                    : integrate(config, flags.settings, events);

  Json flag_echo = flow_flags_json(flags.flow);
  flag_echo["t-max"] = flags.settings.t_max;
  flag_echo["output-dt"] = flags.settings.output_dt;
  flag_echo["rel-tol"] = flags.settings.rel_tol;
  flag_echo["abs-tol"] = flags.settings.abs_tol;
  flag_echo["max-step"] = flags.settings.max_step;
  flag_echo["min-step"] = flags.settings.min_step;
  flag_echo["y-floor"] = events.y_floor;
  flag_echo["velocity-floor"] = events.velocity_floor;
  flag_echo["backward"] = flags.backward;

  const IntegrationStats& stats = trajectory.stats();
  Json result{{"termination", termination_json(trajectory.termination())},
              {"samples", trajectory.samples().size()},
              {"csv", flags.out.empty() ? Json(nullptr) : Json(flags.out)}};
  Json diagnostics{
      {"accepted_steps", stats.accepted_steps},
      {"rejected_steps", stats.rejected_steps},
      {"rhs_evaluations", stats.rhs_evaluations},
      {"max_step_first_integral_residual", stats.max_step_first_integral_residual},
      {"max_constraint_residual", trajectory.max_abs_ham_residual()}};

  std::ostringstream document;
  {
    const Json manifest = inv.manifest(
        std::move(flag_echo), Json{{"flow", flow_json(config)},
                                   {"integrator", settings_json(flags.settings)},
                                   {"events", events_json(events)}});
    write_json(document, Json{{"result", std::move(result)},
                              {"diagnostics", std::move(diagnostics)},
                              {"manifest", manifest}});
  }

  if (flags.out.empty()) {
    std::ostringstream csv;
    write_csv(csv, trajectory);
    out << csv.str();
    err << document.str();
  } else {
    std::ofstream csv(flags.out, std::ios::binary);
    if (!csv) throw InvalidFlags("cannot open output file " + flags.out);
    write_csv(csv, trajectory);
    std::ofstream manifest_file(flags.out + ".manifest.json", std::ios::binary);
    if (!manifest_file) throw InvalidFlags("cannot open manifest file");
    manifest_file << document.str();
  }

  if (trajectory.termination().kind == TerminationKind::StepSizeCollapse) {
    err << "integration failed: step size collapsed at t = "
        << format_double(trajectory.termination().t) << '\n';
    return kExitIntegratorFailure;
  }
  return kExitOk;
}

int cmd_classify(const ClassifyFlags& flags, std::ostream& out) {
  Invocation inv("classify", out);
  const FlowConfig config = to_config(flags.flow);
  const EventSpec events = to_events(flags.events);
  if (!(flags.horizon > 0.0)) throw InvalidFlags("--horizon must be positive");

  const Classification c = classify(config, flags.horizon, events);
  Json flag_echo = flow_flags_json(flags.flow);
  flag_echo["horizon"] = flags.horizon;
  flag_echo["y-floor"] = events.y_floor;
  flag_echo["velocity-floor"] = events.velocity_floor;
  Json diagnostics = classification_diagnostics_json(c.diagnostics);
  if (config.sign == CurvatureSign::Positive) {
    diagnostics["analytic_thresholds"] = thresholds_json(config.n());
  } else {
    diagnostics["analytic_thresholds"] = nullptr;
  }
  inv.emit(classification_json(c), std::move(diagnostics),
           inv.manifest(std::move(flag_echo),
                        Json{{"flow", flow_json(config)},
                             {"integrator", settings_json(classification_settings(flags.horizon))},
                             {"events", events_json(events)}}));
  return kExitOk;
}

int cmd_bisect(const BisectFlags& flags, std::ostream& out) {
  Invocation inv("bisect", out);
  const CurvatureSign sign = sign_of(flags.curvature);
  validated([&] { return FlowConfig::from_dimension(flags.n, sign, flags.lo); });
  validated([&] { return FlowConfig::from_dimension(flags.n, sign, flags.hi); });
  if (!(flags.lo < flags.hi)) throw InvalidFlags("--lo must be smaller than --hi");
  if (!(flags.tol > 0.0)) throw InvalidFlags("--tol must be positive");
  if (!(flags.horizon > 0.0)) throw InvalidFlags("--horizon must be positive");

  Json flag_echo{{"n", flags.n},   {"curvature", flags.curvature}, {"lo", flags.lo},
                 {"hi", flags.hi}, {"tol", flags.tol},             {"horizon", flags.horizon}};
  Json config{{"n", flags.n},
              {"curvature", flags.curvature},
              {"integrator", settings_json(classification_settings(flags.horizon))},
              {"events", events_json(EventSpec{})}};

  const BisectionResult r =
      bisect_critical(flags.n, sign, flags.lo, flags.hi, flags.tol, flags.horizon);
  Json result{{"s_lo", r.s_lo},
              {"s_hi", r.s_hi},
              {"midpoint", r.midpoint()},
              {"iterations", r.iterations},
              {"horizon_used", r.horizon_used},
              {"verdict_lo", std::string(to_string(r.verdict_lo))},
              {"verdict_hi", std::string(to_string(r.verdict_hi))}};
  Json diagnostics{{"width", r.width()}, {"analytic_thresholds", thresholds_json(flags.n)}};
  inv.emit(std::move(result), std::move(diagnostics),
           inv.manifest(std::move(flag_echo), std::move(config)));
  return kExitOk;
}

unsigned parse_threads(const char* env) {
  if (env == nullptr) return 0;
  const std::string text(env);
  std::size_t used = 0;
  long value = 0;
  try {
    value = std::stol(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty() || value <= 0) {
    throw InvalidFlags("EFL_THREADS must be a positive integer, got '" + text + "'");
  }
  return static_cast<unsigned>(value);
}

int cmd_sweep(const SweepFlags& flags, std::ostream& out, const char* threads_env) {
  Invocation inv("sweep", out);
  const CurvatureSign sign = sign_of(flags.curvature);
  if (!(flags.horizon > 0.0)) throw InvalidFlags("--horizon must be positive");
  const unsigned threads = parse_threads(threads_env);

  std::vector<double> grid = flags.s_values;
  if (grid.empty()) {
    if (flags.steps < 1) throw InvalidFlags("--steps must be >= 1");
    if (!(flags.s_min <= flags.s_max)) throw InvalidFlags("--s-min must be <= --s-max");
    grid.resize(static_cast<std::size_t>(flags.steps));
    for (int i = 0; i < flags.steps; ++i) {
      grid[static_cast<std::size_t>(i)] =
          flags.steps == 1
              ? flags.s_min
              : flags.s_min + (flags.s_max - flags.s_min) * i / (flags.steps - 1);
    }
  }
  for (double s : grid) {
    validated([&] { return FlowConfig::from_dimension(flags.n, sign, s); });
  }

  const std::vector<SweepRow> rows = sweep(flags.n, sign, grid, flags.horizon, threads);
  Json table = Json::array();
  for (const SweepRow& row : rows) {
    const FlowConfig config = FlowConfig::from_dimension(flags.n, sign, row.s);
    Json entry{{"s", row.s}};
    if (row.classification) {
      Json c = classification_json(*row.classification);
      c["diagnostics"] = classification_diagnostics_json(row.classification->diagnostics);
      entry["classification"] = std::move(c);
    } else {
      entry["classification"] = nullptr;
    }
    entry["limit"] = row.limit ? limit_json(config, *row.limit) : Json(nullptr);
    entry["error"] = row.error ? Json(*row.error) : Json(nullptr);
    table.push_back(std::move(entry));
  }

  Json flag_echo{{"n", flags.n}, {"curvature", flags.curvature}};
  if (flags.s_values.empty()) {
    flag_echo["s-min"] = flags.s_min;
    flag_echo["s-max"] = flags.s_max;
    flag_echo["steps"] = flags.steps;
  } else {
    flag_echo["s-values"] = flags.s_values;
  }
  flag_echo["horizon"] = flags.horizon;

  const unsigned effective =
      threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  Json diagnostics{{"threads", effective},
                   {"analytic_thresholds", sign == CurvatureSign::Positive
                                               ? thresholds_json(flags.n)
                                               : Json(nullptr)}};
  inv.emit(Json{{"rows", std::move(table)}}, std::move(diagnostics),
           inv.manifest(std::move(flag_echo),
                        Json{{"n", flags.n},
                             {"curvature", flags.curvature},
                             {"s_grid", grid},
                             {"integrator", settings_json(classification_settings(flags.horizon))},
                             {"events", events_json(EventSpec{})}}));
  return kExitOk;
}

int cmd_hamiltonian(const HamiltonianFlags& flags, std::ostream& out) {
  Invocation inv("hamiltonian", out);
  const FlowConfig config = to_config(flags.flow);
  if (!(flags.horizon > 0.0)) throw InvalidFlags("--horizon must be positive");

  Json flag_echo = flow_flags_json(flags.flow);
  flag_echo["horizon"] = flags.horizon;
  Json manifest = inv.manifest(
      std::move(flag_echo),
      Json{{"flow", flow_json(config)},
           {"integrator", settings_json(classification_settings(flags.horizon))},
           {"events", events_json(EventSpec{})}});

  const HamiltonianAudit audit = hamiltonian_audit(config, flags.horizon);
  Json series = Json::array();
  for (const AuditPoint& p : audit.series) series.push_back(Json::array({p.t, p.h_red}));
  Json result{{"branch", std::string(branch_name(audit.branch))},
              {"verdict", std::string(to_string(audit.verdict))},
              {"h_red_initial", audit.series.front().h_red},
              {"h_red_final", audit.series.back().h_red},
              {"relative_variation", audit.relative_variation},
              {"empirical_sign", audit.empirical_sign},
              {"series", std::move(series)}};
  Json diagnostics{{"increases", audit.increases},
                   {"decreases", audit.decreases},
                   {"noise_floor", kAuditNoiseFloor},
                   {"constant_tolerance", kConstantTolerance},
                   {"termination", termination_json(audit.termination)}};
  inv.emit(std::move(result), std::move(diagnostics), std::move(manifest));
  return kExitOk;
}

int cmd_background(const BackgroundFlags& flags, std::ostream& out) {
  Invocation inv("background", out);
  const CurvatureSign sign = sign_of(flags.curvature);
  if (flags.n < 2) throw InvalidFlags("--n must be >= 2");
  if (!flags.t && !flags.rescaled_t) throw InvalidFlags("give --t and/or --T");

  const BackgroundModel model(flags.n, sign);
  Json flag_echo{{"n", flags.n}, {"curvature", flags.curvature}};
  if (flags.t) flag_echo["t"] = *flags.t;
  if (flags.rescaled_t) flag_echo["T"] = *flags.rescaled_t;

  const TimeInterval domain = model.time_domain();
  Json result{{"n", flags.n},
              {"curvature", flags.curvature},
              {"time_domain", Json::array({domain.lower, domain.upper})}};
  Json diagnostics = Json::object();

  if (flags.t) {
    const double t = *flags.t;
    const GaugeQuantities g = gauge_quantities(model, t);
    result["proper_time"] = Json{{"t", t},
                                 {"scale_factor", scale_factor(model, t)},
                                 {"tau", g.tau},
                                 {"lapse", g.lapse},
                                 {"scale_sq", g.scale_sq}};
    diagnostics["lapse_equation_residual"] =
        homogeneous_lapse_residual(flags.n, g.tau, g.lapse, sign);
  } else {
    result["proper_time"] = nullptr;
    diagnostics["lapse_equation_residual"] = nullptr;
  }

  if (flags.rescaled_t) {
    const double T = *flags.rescaled_t;
    const CmcTimeMap map = cmc_time_maps(flags.n, sign, T);
    const RescaledResidual res = rescaled_background_residual(flags.n, sign, T);
    const double warp = sign == CurvatureSign::Negative ? std::sinh(T) : std::cosh(T);
    result["rescaled"] = Json{{"T", T},
                              {"tau", map.tau},
                              {"s", map.scale},
                              {"residual_metric", res.metric},
                              {"residual_sigma", res.sigma}};
    diagnostics["scale_identity_defect"] = map.scale * warp * warp - 1.0;
  } else {
    result["rescaled"] = nullptr;
    diagnostics["scale_identity_defect"] = nullptr;
  }

  inv.emit(std::move(result), std::move(diagnostics),
           inv.manifest(std::move(flag_echo),
                        Json{{"n", flags.n}, {"curvature", flags.curvature}}));
  return kExitOk;
}

// ---------------------------------------------------------------------------

// Expands `--config FILE` into ordinary flags placed directly after the
// subcommand, so that explicit flags (which come later) take precedence.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> rest;
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--config") {
      if (i + 1 >= args.size()) throw InvalidFlags("--config requires a file path");
      path = args[++i];
    } else if (a.rfind("--config=", 0) == 0) {
      path = a.substr(9);
    } else {
      rest.push_back(a);
    }
  }
  if (!path) return rest;

  std::ifstream in(*path);
  if (!in) throw InvalidFlags("cannot read config file " + *path);
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InvalidFlags(std::string("config file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw InvalidFlags("config file must hold a JSON object");

  std::vector<std::string> injected;
  for (const auto& [key, value] : doc.items()) {
    const std::string flag = "--" + key;
    if (value.is_boolean()) {
      if (value.get<bool>()) injected.push_back(flag);
    } else if (value.is_number_integer()) {
      injected.push_back(flag);
      injected.push_back(std::to_string(value.get<long long>()));
    } else if (value.is_number()) {
      injected.push_back(flag);
      injected.push_back(format_double(value.get<double>()));
    } else if (value.is_string()) {
      injected.push_back(flag);
      injected.push_back(value.get<std::string>());
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& item : value) {
        if (!item.is_number()) throw InvalidFlags("config arrays must hold numbers");
        if (!joined.empty()) joined += ',';
        joined += format_double(item.get<double>());
      }
      injected.push_back(flag);
      injected.push_back(joined);
    } else if (!value.is_null()) {
      throw InvalidFlags("unsupported config value for key '" + key + "'");
    }
  }

  const std::size_t insert_at = std::min<std::size_t>(2, rest.size());
  rest.insert(rest.begin() + static_cast<std::ptrdiff_t>(insert_at), injected.begin(),
              injected.end());
  return rest;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err,
        const char* threads_env) {
  CLI::App app{"Product-manifold flows: simulate, classify, bisect, sweep, audit",
               "efl"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  app.add_option("--config", "JSON file whose keys mirror the subcommand's flags");

  SimulateFlags simulate;
  auto* sim = app.add_subcommand("simulate", "Integrate one trajectory and write CSV");
  add_flow_options(sim, simulate.flow);
  add_event_options(sim, simulate.events);
  sim->add_option("--t-max", simulate.settings.t_max, "Integration horizon")
      ->capture_default_str();
  sim->add_option("--output-dt", simulate.settings.output_dt, "Sampling interval")
      ->capture_default_str();
  sim->add_option("--rel-tol", simulate.settings.rel_tol)->capture_default_str();
  sim->add_option("--abs-tol", simulate.settings.abs_tol)->capture_default_str();
  sim->add_option("--max-step", simulate.settings.max_step)->capture_default_str();
  sim->add_option("--min-step", simulate.settings.min_step)->capture_default_str();
  sim->add_option("--out", simulate.out, "CSV path; manifest goes to PATH.manifest.json");
  sim->add_flag("--backward", simulate.backward, "Integrate along t -> -t");

  ClassifyFlags classify_flags;
  auto* cls = app.add_subcommand("classify", "Recollapse vs. completeness within a horizon");
  add_flow_options(cls, classify_flags.flow);
  add_event_options(cls, classify_flags.events);
  cls->add_option("--horizon", classify_flags.horizon)->capture_default_str();

  BisectFlags bisect_flags;
  auto* bis = app.add_subcommand("bisect", "Bisect the critical coupling parameter");
  bis->add_option("--n", bisect_flags.n)->required();
  bis->add_option("--curvature", bisect_flags.curvature)
      ->required()
      ->check(CLI::IsMember({"positive", "negative"}));
  bis->add_option("--lo", bisect_flags.lo)->required();
  bis->add_option("--hi", bisect_flags.hi)->required();
  bis->add_option("--tol", bisect_flags.tol)->capture_default_str();
  bis->add_option("--horizon", bisect_flags.horizon)->capture_default_str();

  SweepFlags sweep_flags;
  auto* swp = app.add_subcommand("sweep", "Classify and extract limits over a grid of s");
  swp->add_option("--n", sweep_flags.n)->required();
  swp->add_option("--curvature", sweep_flags.curvature)
      ->required()
      ->check(CLI::IsMember({"positive", "negative"}));
  auto* s_min = swp->add_option("--s-min", sweep_flags.s_min);
  auto* s_max = swp->add_option("--s-max", sweep_flags.s_max);
  auto* steps = swp->add_option("--steps", sweep_flags.steps);
  auto* s_values = swp->add_option("--s-values", sweep_flags.s_values, "Comma-separated grid")
                       ->delimiter(',')
                       ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)
                       ->expected(1, -1);
  s_values->excludes(s_min)->excludes(s_max)->excludes(steps);
  swp->add_option("--horizon", sweep_flags.horizon)->capture_default_str();

  HamiltonianFlags ham_flags;
  auto* ham = app.add_subcommand("hamiltonian", "Reduced-Hamiltonian monotonicity audit");
  add_flow_options(ham, ham_flags.flow);
  ham->add_option("--horizon", ham_flags.horizon)->capture_default_str();

  BackgroundFlags bg_flags;
  auto* bg = app.add_subcommand("background", "Closed-form background quantities");
  bg->add_option("--n", bg_flags.n)->required();
  bg->add_option("--curvature", bg_flags.curvature)
      ->required()
      ->check(CLI::IsMember({"positive", "negative"}));
  bg->add_option("--t", bg_flags.t, "Proper time");
  bg->add_option("--T", bg_flags.rescaled_t, "Rescaled time");

  try {
    const std::vector<std::string> args = expand_config(raw_args);
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();  // program name
    try {
      app.parse(reversed);
    } catch (const CLI::Success& e) {
      return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
      app.exit(e, out, err);
      return kExitInvalidFlags;
    }

    if (sim->parsed()) return cmd_simulate(simulate, out, err);
    if (cls->parsed()) return cmd_classify(classify_flags, out);
    if (bis->parsed()) return cmd_bisect(bisect_flags, out);
    if (swp->parsed()) {
      if (sweep_flags.s_values.empty() &&
          (s_min->count() == 0 || s_max->count() == 0 || steps->count() == 0)) {
        throw InvalidFlags("sweep needs --s-values or all of --s-min, --s-max, --steps");
      }
      return cmd_sweep(sweep_flags, out, threads_env);
    }
    if (ham->parsed()) return cmd_hamiltonian(ham_flags, out);
    if (bg->parsed()) return cmd_background(bg_flags, out);
    err << "no subcommand given\n";
    return kExitInvalidFlags;
  } catch (const InvalidFlags& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalidFlags;
  } catch (const GaugeRangeError& e) {
    err << "error: " << e.what() << " (t = " << format_double(e.t()) << ")\n";
    write_json(out, Json{{"result", nullptr},
                         {"diagnostics", Json{{"error", "GaugeRangeError"},
                                              {"message", e.what()},
                                              {"t", e.t()},
                                              {"sample", e.sample()}}},
                         {"manifest", nullptr}});
    return kExitPrecondition;
  } catch (const std::exception& e) {
    // BracketError, RegimeError, DomainError and other precondition failures.
    const char* kind = dynamic_cast<const BracketError*>(&e)   ? "BracketError"
                       : dynamic_cast<const RegimeError*>(&e)  ? "RegimeError"
                       : dynamic_cast<const DomainError*>(&e)  ? "DomainError"
                                                               : "PreconditionError";
    err << "error: " << e.what() << '\n';
    write_json(out, Json{{"result", nullptr},
                         {"diagnostics", Json{{"error", kind}, {"message", e.what()}}},
                         {"manifest", nullptr}});
    return kExitPrecondition;
  }
}

}  // namespace efl::cli
