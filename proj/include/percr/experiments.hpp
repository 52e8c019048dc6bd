#pragma once

// Named experiments over the solver and functionals, driven by a JSON
// config.  Each run produces an ExperimentReport: an echo of the config,
// one row per judged quantity (every row cites the tolerance it was held
// to), plot series, and an overall verdict.  Reports serialize to CSV and
// JSON; identical config+seed pairs produce byte-identical files.
//
// Sweep cases are independent; they run sequentially so report order is
// stable regardless of the host's core count.

#include <algorithm>
#include <array>
#include <filesystem>
#include <map>

#include <json.hpp>

#include "percr/solver.hpp"

namespace percr {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string experiment;
  double s_half = 6.0;
  int n_s = 400;
  int n_t = 64;
  int k = 1;
  std::string psi_kind = "bump";
  double tau = 2.0;
  double mass = 1.0;
  double support_a = -1.0;
  double support_b = 1.0;
  double lambda = 1.0;
  std::vector<double> schedule{0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<int> k_sweep{-2, -1, 1, 2, 3};
  std::vector<double> mass_sweep{0.5, 1.0, 2.0};
  std::map<std::string, double> tolerances;
  int levels = 3;
  unsigned long long seed = 0;
  bool has_seed = false;
  int seeds = 10;
  int samples = 10000;
  double taming_safety = 1.1;
  std::string output = "out";
};

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{
      "area-constant-psi", "positivity-sweep", "homotopy-invariance",
      "identity-suite",    "taming-study",     "convergence-study"};
  return names;
}

namespace detail {

inline void apply_grid_defaults(ExperimentConfig& cfg) {
  if (cfg.experiment == "area-constant-psi") {
    cfg.s_half = 10.0;
    cfg.n_s = 2000;
    cfg.n_t = 128;
  } else if (cfg.experiment == "identity-suite" ||
             cfg.experiment == "convergence-study") {
    // Base of the refinement ladder.  One halving coarser already shows the
    // second-order ratios, but from this base every defect sits inside the
    // [3.5, 4.5] window instead of brushing its lower edge.
    cfg.s_half = 6.0;
    cfg.n_s = 241;
    cfg.n_t = 32;
  } else {
    cfg.s_half = 6.0;
    cfg.n_s = 400;
    cfg.n_t = 64;
  }
}

inline double tol_of(const ExperimentConfig& cfg, const std::string& name,
                     double fallback) {
  auto it = cfg.tolerances.find(name);
  return it == cfg.tolerances.end() ? fallback : it->second;
}

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  static const std::vector<std::string> allowed{
      "experiment", "grid",   "family",  "schedule", "sweep",        "tolerances",
      "levels",     "seed",   "seeds",   "samples",  "taming_safety", "output"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      throw ConfigError("config: unknown key '" + it.key() + "'");

  ExperimentConfig cfg;
  if (!j.contains("experiment") || !j["experiment"].is_string())
    throw ConfigError("config: 'experiment' (string) is required");
  cfg.experiment = j["experiment"].get<std::string>();
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), cfg.experiment) == names.end())
    throw ConfigError("config: unknown experiment '" + cfg.experiment + "'");
  detail::apply_grid_defaults(cfg);

  if (j.contains("grid")) {
    const auto& g = j["grid"];
    if (!g.is_object()) throw ConfigError("config: 'grid' must be an object");
    if (g.contains("s_half")) cfg.s_half = g["s_half"].get<double>();
    if (g.contains("n_s")) cfg.n_s = g["n_s"].get<int>();
    if (g.contains("n_t")) cfg.n_t = g["n_t"].get<int>();
    if (!(cfg.s_half > 0.0)) throw ConfigError("config: grid.s_half must be > 0");
    if (cfg.n_s < 8 || cfg.n_t < 8)
      throw ConfigError("config: grid needs n_s, n_t >= 8");
  }
  if (j.contains("family")) {
    const auto& f = j["family"];
    if (!f.is_object()) throw ConfigError("config: 'family' must be an object");
    if (f.contains("k")) cfg.k = f["k"].get<int>();
    if (f.contains("psi")) cfg.psi_kind = f["psi"].get<std::string>();
    if (cfg.psi_kind != "constant" && cfg.psi_kind != "bump")
      throw ConfigError("config: family.psi must be 'constant' or 'bump'");
    if (f.contains("tau")) cfg.tau = f["tau"].get<double>();
    if (f.contains("mass")) cfg.mass = f["mass"].get<double>();
    if (f.contains("support")) {
      const auto& s = f["support"];
      if (!s.is_array() || s.size() != 2)
        throw ConfigError("config: family.support must be [a, b]");
      cfg.support_a = s[0].get<double>();
      cfg.support_b = s[1].get<double>();
      if (!(cfg.support_a < cfg.support_b))
        throw ConfigError("config: family.support needs a < b");
    }
    if (f.contains("lambda")) cfg.lambda = f["lambda"].get<double>();
    if (cfg.lambda < 0.0 || cfg.lambda > 1.0)
      throw ConfigError("config: family.lambda must lie in [0, 1]");
  }
  if (j.contains("schedule")) {
    cfg.schedule = j["schedule"].get<std::vector<double>>();
    if (cfg.schedule.empty()) throw ConfigError("config: schedule is empty");
  }
  if (j.contains("sweep")) {
    const auto& s = j["sweep"];
    if (!s.is_object()) throw ConfigError("config: 'sweep' must be an object");
    if (s.contains("k")) cfg.k_sweep = s["k"].get<std::vector<int>>();
    if (s.contains("mass")) cfg.mass_sweep = s["mass"].get<std::vector<double>>();
    if (cfg.k_sweep.empty() || cfg.mass_sweep.empty())
      throw ConfigError("config: sweep lists must be non-empty");
  }
  if (j.contains("tolerances")) {
    for (auto it = j["tolerances"].begin(); it != j["tolerances"].end(); ++it) {
      const double v = it.value().get<double>();
      if (!(v > 0.0))
        throw ConfigError("config: tolerance '" + it.key() + "' must be > 0");
      cfg.tolerances[it.key()] = v;
    }
  }
  if (j.contains("levels")) {
    cfg.levels = j["levels"].get<int>();
    if (cfg.levels < 2 || cfg.levels > 6)
      throw ConfigError("config: levels must lie in [2, 6]");
  }
  if (j.contains("seed")) {
    cfg.seed = j["seed"].get<unsigned long long>();
    cfg.has_seed = true;
  }
  if (j.contains("seeds")) {
    cfg.seeds = j["seeds"].get<int>();
    if (cfg.seeds < 1) throw ConfigError("config: seeds must be >= 1");
  }
  if (j.contains("samples")) {
    cfg.samples = j["samples"].get<int>();
    if (cfg.samples < 1) throw ConfigError("config: samples must be >= 1");
  }
  if (j.contains("taming_safety")) {
    cfg.taming_safety = j["taming_safety"].get<double>();
    if (!(cfg.taming_safety > 1.0))
      throw ConfigError("config: taming_safety must exceed 1");
  }
  if (j.contains("output")) cfg.output = j["output"].get<std::string>();

  if (cfg.experiment == "taming-study" && !cfg.has_seed)
    throw ConfigError("config: taming-study is randomized and requires a seed");
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: JSON parse error: ") + e.what());
  }
  return parse_config(j);
}

struct CaseRow {
  std::string label;
  double value = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  std::string tolerance_name;
  bool pass = false;
  std::string note;
};

struct ExperimentReport {
  std::string experiment;
  nlohmann::ordered_json config_echo;
  std::vector<CaseRow> rows;
  bool pass = true;
  std::map<std::string, std::vector<std::array<double, 2>>> series;

  void add_row(CaseRow row) {
    pass = pass && row.pass;
    rows.push_back(std::move(row));
  }
};

namespace detail {

inline nlohmann::ordered_json echo_config(const ExperimentConfig& cfg) {
  nlohmann::ordered_json e;
  e["experiment"] = cfg.experiment;
  e["grid"] = {{"s_half", cfg.s_half}, {"n_s", cfg.n_s}, {"n_t", cfg.n_t}};
  e["family"] = {{"k", cfg.k},          {"psi", cfg.psi_kind},
                 {"tau", cfg.tau},      {"mass", cfg.mass},
                 {"support", {cfg.support_a, cfg.support_b}},
                 {"lambda", cfg.lambda}};
  e["schedule"] = cfg.schedule;
  e["sweep"] = {{"k", cfg.k_sweep}, {"mass", cfg.mass_sweep}};
  nlohmann::ordered_json tols;
  for (const auto& [k, v] : cfg.tolerances) tols[k] = v;
  e["tolerances"] = tols;
  e["levels"] = cfg.levels;
  if (cfg.has_seed) e["seed"] = cfg.seed;
  e["seeds"] = cfg.seeds;
  e["samples"] = cfg.samples;
  e["taming_safety"] = cfg.taming_safety;
  return e;
}

inline CylinderGrid make_grid(const ExperimentConfig& cfg) {
  return CylinderGrid(-cfg.s_half, cfg.s_half, cfg.n_s, cfg.n_t);
}

inline PsiProfile make_psi(const ExperimentConfig& cfg) {
  if (cfg.psi_kind == "constant") return PsiProfile::constant(cfg.tau);
  return PsiProfile::bump(cfg.support_a, cfg.support_b, cfg.mass);
}

inline PsiProfile make_bump(const ExperimentConfig& cfg, double mass) {
  return PsiProfile::bump(cfg.support_a, cfg.support_b, mass);
}

inline CylinderGrid refined(const CylinderGrid& g, int level) {
  int ns = g.n_s, nt = g.n_t;
  for (int l = 0; l < level; ++l) {
    ns = 2 * (ns - 1) + 1;  // halves h_s exactly
    nt = 2 * nt;
  }
  return CylinderGrid(g.s_min, g.s_max, ns, nt);
}

// Fixed sphere sample points for the operator identities, spread over both
// charts and away from the switch circle.
inline std::vector<SpherePoint> standard_m_samples() {
  return {SpherePoint{cpx(0.3, 0.2), Chart::Z},
          SpherePoint{cpx(-0.7, 0.45), Chart::Z},
          SpherePoint{cpx(0.0, 0.5), Chart::W},
          SpherePoint{cpx(0.9, -0.2), Chart::W}};
}

inline double standard_profile(double s) {
  return std::exp(-0.25 * s * s) * (1.0 + 0.3 * std::sin(0.7 * s));
}

// Globally smooth scalar test function, constant in t so that every
// discrete route differentiates the same one-dimensional profile.
inline SampledFunction standard_function(const CylinderGrid& g) {
  SampledFunction f;
  f.grid = g;
  f.m_samples = standard_m_samples();
  f.eval = [](double s, double, const SpherePoint& m) {
    const EmbeddingPoint e = sphere_embedding(m);
    const double shape = 0.8 + 0.5 * e.x1 + 0.3 * e.x2 + 0.4 * e.x3 + 0.2 * e.x1 * e.x3;
    return cpx(standard_profile(s) * shape, 0.4 * standard_profile(s) * e.x3);
  };
  return f;
}

// Globally holomorphic vector field (quadratic in the Z chart) times the
// s-profile; expressed in whichever chart the sample point carries.
inline SampledVectorField standard_vector_field(const CylinderGrid& g) {
  SampledVectorField x;
  x.grid = g;
  x.m_samples = standard_m_samples();
  const cpx c0(0.4, 0.3), c1(0.5, -0.2), c2(0.1, 0.25);
  x.eval = [c0, c1, c2](double s, double, const SpherePoint& m) {
    const double pr = standard_profile(s);
    if (m.chart == Chart::Z)
      return pr * (c0 + c1 * m.coord + c2 * m.coord * m.coord);
    // Pushforward of the same field through w = 1/z.
    return -pr * (c2 + c1 * m.coord + c0 * m.coord * m.coord);
  };
  return x;
}

inline double expected_family_area(const SolutionFamily& fam) {
  if (fam.kind == SolutionFamily::Kind::ConstantProfile) return kPi * fam.k;
  return kPi * std::abs(fam.k);
}

inline void add_ratio_rows(ExperimentReport& report, const ExperimentConfig& cfg,
                           const std::string& name,
                           const std::vector<double>& h_values,
                           const std::vector<double>& defects) {
  const double lo = tol_of(cfg, "ratio_low", 3.5);
  const double hi = tol_of(cfg, "ratio_high", 4.5);
  auto& series = report.series["defect-vs-h:" + name];
  for (size_t l = 0; l < defects.size(); ++l)
    series.push_back({h_values[l], defects[l]});
  for (size_t l = 0; l + 1 < defects.size(); ++l) {
    CaseRow row;
    row.label = name + " ratio L" + std::to_string(l) + "/L" + std::to_string(l + 1);
    row.value = defects[l + 1] > 0.0 ? defects[l] / defects[l + 1] : 0.0;
    row.expected = 0.5 * (lo + hi);
    row.tolerance = 0.5 * (hi - lo);
    row.tolerance_name = "ratio-window";
    row.pass = row.value >= lo && row.value <= hi;
    row.note = "defects " + fmt_short(defects[l]) + " -> " + fmt_short(defects[l + 1]);
    report.add_row(std::move(row));
  }
}

// Solver tolerance for homotopy runs, anchored at the discretization floor:
// the sampled family itself leaves a truncation-sized residual, and no
// consistent solve can land below it without chasing grid artifacts, so the
// target is a small multiple of the worst family residual on the schedule.
inline double auto_solver_tol(const ExperimentConfig& cfg, int k,
                              const PsiProfile& psi, const CylinderGrid& grid,
                              const std::vector<double>& schedule) {
  const double configured = tol_of(cfg, "solver", 0.0);
  if (configured > 0.0) return configured;
  double worst = 0.0;
  for (double lam : schedule) {
    const SolutionFamily fam = SolutionFamily::properly_perturbed(k, psi, lam);
    worst = std::max(worst, residual_of_family(fam, grid));
  }
  return 2.0 * worst;
}

inline void run_area_constant_psi(const ExperimentConfig& cfg,
                                  ExperimentReport& report) {
  if (cfg.psi_kind != "constant")
    throw ConfigError("area-constant-psi: family.psi must be 'constant'");
  const SolutionFamily fam = SolutionFamily::constant_profile(cfg.k, cfg.tau);
  CaseRow valid_row;
  valid_row.label = "validity pi*k + 2*tau";
  valid_row.value = kPi * cfg.k + 2.0 * cfg.tau;
  valid_row.expected = 0.0;
  valid_row.tolerance = 0.0;
  valid_row.tolerance_name = "strictly-positive";
  valid_row.pass = fam.valid();
  report.add_row(valid_row);
  if (!fam.valid()) return;

  const CylinderGrid grid = make_grid(cfg);
  const MapSample u = sample_family(fam, grid);
  const AreaReport area = symplectic_area(u);
  CaseRow row;
  row.label = "area k=" + std::to_string(cfg.k) + " tau=" + fmt_short(cfg.tau);
  row.value = area.area;
  row.expected = kPi * cfg.k;
  row.tolerance = tol_of(cfg, "area", 1e-3);
  row.tolerance_name = "area";
  row.pass = std::abs(row.value - row.expected) <= row.tolerance;
  row.note = "tail estimate " + fmt_short(area.tail_estimate);
  report.add_row(std::move(row));
  auto& dens = report.series["density-vs-s"];
  for (int i = 0; i < grid.n_s; ++i)
    dens.push_back({grid.s(i), area.row_density[i]});
}

inline void run_positivity_sweep(const ExperimentConfig& cfg,
                                 ExperimentReport& report) {
  const CylinderGrid grid = make_grid(cfg);
  const double floor = tol_of(cfg, "positivity", 1e-3);
  SolverOptions options;
  options.preconditioner = PrecondKind::Structured;
  int case_index = 0;
  for (int k : cfg.k_sweep)
    for (double mass : cfg.mass_sweep) {
      const PsiProfile psi = make_bump(cfg, mass);
      const double tol = auto_solver_tol(cfg, k, psi, grid, cfg.schedule);
      const HomotopyResult hr =
          homotopy_continue(k, psi, grid, cfg.schedule, tol, 8, options);
      CaseRow row;
      row.label = "area k=" + std::to_string(k) + " mass=" + fmt_short(mass);
      row.tolerance = floor;
      row.tolerance_name = "positivity-floor";
      if (!hr.completed) {
        row.pass = false;
        row.note = "stage " + std::to_string(hr.failure_index) + " failed: " +
                   hr.stages.back().report.failure;
      } else {
        const HomotopyStage& last = hr.stages.back();
        row.value = last.area;
        row.expected = kPi * std::abs(k);
        row.pass = last.area >= -floor;
        int newton = 0;
        for (const auto& st : hr.stages) newton += st.report.iterations;
        row.note = "newton iterations " + std::to_string(newton) +
                   ", solver tol " + fmt_short(tol);
      }
      report.add_row(row);
      report.series["area-vs-case"].push_back(
          {static_cast<double>(case_index), row.value});
      ++case_index;
    }
}

inline void run_homotopy_invariance(const ExperimentConfig& cfg,
                                    ExperimentReport& report) {
  if (cfg.psi_kind != "bump")
    throw ConfigError("homotopy-invariance: family.psi must be 'bump'");
  const CylinderGrid grid = make_grid(cfg);
  const PsiProfile psi = make_bump(cfg, cfg.mass);
  const double tol = auto_solver_tol(cfg, cfg.k, psi, grid, cfg.schedule);
  SolverOptions options;
  options.preconditioner = PrecondKind::Structured;
  const HomotopyResult hr =
      homotopy_continue(cfg.k, psi, grid, cfg.schedule, tol, 8, options);
  auto& series = report.series["area-vs-lambda"];
  for (const HomotopyStage& st : hr.stages) {
    CaseRow row;
    row.label = "residual lambda=" + fmt_short(st.lambda);
    row.value = st.report.final_residual;
    row.expected = 0.0;
    row.tolerance = tol;
    row.tolerance_name = "solver";
    row.pass = st.report.converged;
    row.note = "newton iterations " + std::to_string(st.report.iterations);
    report.add_row(std::move(row));
    series.push_back({st.lambda, st.area});
  }
  CaseRow drift;
  drift.label = "pairwise area drift";
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const HomotopyStage& st : hr.stages) {
    lo = std::min(lo, st.area);
    hi = std::max(hi, st.area);
  }
  drift.value = hr.stages.empty() ? 0.0 : hi - lo;
  drift.expected = 0.0;
  drift.tolerance = tol_of(cfg, "drift", 1e-3);
  drift.tolerance_name = "drift";
  drift.pass = hr.completed && drift.value <= drift.tolerance;
  drift.note = "areas in [" + fmt_short(lo) + ", " + fmt_short(hi) + "]";
  report.add_row(std::move(drift));
}

inline void run_identity_suite(const ExperimentConfig& cfg,
                               ExperimentReport& report) {
  const CylinderGrid base = make_grid(cfg);
  const PsiProfile psi = make_bump(cfg, cfg.mass);
  const PerturbationSpec spec(psi, 1.0);
  const SolutionFamily perturbed = SolutionFamily::properly_perturbed(1, psi, 1.0);
  const SolutionFamily holomorphic = SolutionFamily::properly_perturbed(1, psi, 0.0);

  std::vector<double> h_values;
  std::map<std::string, std::vector<double>> defects;
  for (int level = 0; level < cfg.levels; ++level) {
    const CylinderGrid g = refined(base, level);
    h_values.push_back(g.h_s());
    defects["diagram-commutation-vector"].push_back(
        diagram_defect_0(standard_vector_field(g)));
    defects["diagram-commutation-function"].push_back(
        diagram_defect_1(standard_function(g)));
    defects["perturbation-two-ways"].push_back(
        exact_perturbation_two_ways(standard_function(g)).defect);
    defects["proper-exactness"].push_back(
        verify_proper_exactness(spec, g, standard_m_samples()));
    defects["family-residual"].push_back(
        residual_of_family(perturbed, g));
    defects["antilinearity"].push_back(antilinear_defect(
        sample_family(holomorphic, g), HolomorphyMode::Holomorphic));
  }
  for (const auto& [name, values] : defects)
    add_ratio_rows(report, cfg, name, h_values, values);
}

inline void run_taming_study(const ExperimentConfig& cfg,
                             ExperimentReport& report) {
  const PsiProfile psi = make_psi(cfg);
  const PerturbationSpec spec(psi, cfg.lambda);
  // Probe run fixes f; N is then chosen just above the taming bound.
  const TamingReport probe = taming_margin(spec, 1.0, 64, cfg.seed);
  const double N = std::max(cfg.taming_safety * probe.bound, 1e-3);
  for (int i = 0; i < cfg.seeds; ++i) {
    const unsigned long long seed = cfg.seed + static_cast<unsigned long long>(i);
    const TamingReport tr = taming_margin(spec, N, cfg.samples, seed);
    CaseRow row;
    row.label = "min margin seed=" + std::to_string(seed);
    row.value = tr.min_value;
    row.expected = 0.0;
    row.tolerance = 0.0;
    row.tolerance_name = "strictly-positive";
    row.pass = tr.min_value > 0.0;
    row.note = "f " + fmt_short(tr.f) + ", N " + fmt_short(N) + ", samples " +
               std::to_string(cfg.samples);
    report.add_row(row);
    report.series["margin-vs-seed"].push_back(
        {static_cast<double>(i), tr.min_value});
  }
}

inline void run_convergence_study(const ExperimentConfig& cfg,
                                  ExperimentReport& report) {
  const CylinderGrid base = make_grid(cfg);
  const SolutionFamily fam =
      cfg.psi_kind == "constant"
          ? SolutionFamily::constant_profile(cfg.k, cfg.tau)
          : SolutionFamily::properly_perturbed(cfg.k, make_bump(cfg, cfg.mass),
                                               cfg.lambda);
  if (!fam.valid()) throw ConfigError("convergence-study: family is not valid");
  const double expected_area = expected_family_area(fam);

  std::vector<double> h_values, residuals;
  double finest_area_err = 0.0;
  for (int level = 0; level < cfg.levels; ++level) {
    const CylinderGrid g = refined(base, level);
    h_values.push_back(g.h_s());
    residuals.push_back(residual_of_family(fam, g));
    const AreaReport area = symplectic_area(sample_family(fam, g));
    const double err = std::abs(area.area - expected_area);
    report.series["area-error-vs-h"].push_back({g.h_s(), err});
    if (level == cfg.levels - 1) {
      finest_area_err = err;
      auto& dens = report.series["density-vs-s"];
      for (int i = 0; i < g.n_s; ++i)
        dens.push_back({g.s(i), area.row_density[i]});
    }
  }
  add_ratio_rows(report, cfg, "family-residual", h_values, residuals);
  for (size_t l = 0; l < residuals.size(); ++l)
    report.series["residual-vs-h"].push_back({h_values[l], residuals[l]});

  CaseRow row;
  row.label = "area error at finest level";
  row.value = finest_area_err;
  row.expected = 0.0;
  row.tolerance = tol_of(cfg, "area", 1e-3);
  row.tolerance_name = "area";
  row.pass = finest_area_err <= row.tolerance;
  report.add_row(std::move(row));
}

}  // namespace detail

inline ExperimentReport run(const ExperimentConfig& cfg) {
  ExperimentReport report;
  report.experiment = cfg.experiment;
  report.config_echo = detail::echo_config(cfg);
  if (cfg.experiment == "area-constant-psi")
    detail::run_area_constant_psi(cfg, report);
  else if (cfg.experiment == "positivity-sweep")
    detail::run_positivity_sweep(cfg, report);
  else if (cfg.experiment == "homotopy-invariance")
    detail::run_homotopy_invariance(cfg, report);
  else if (cfg.experiment == "identity-suite")
    detail::run_identity_suite(cfg, report);
  else if (cfg.experiment == "taming-study")
    detail::run_taming_study(cfg, report);
  else if (cfg.experiment == "convergence-study")
    detail::run_convergence_study(cfg, report);
  else
    throw ConfigError("run: unknown experiment '" + cfg.experiment + "'");
  return report;
}

inline nlohmann::ordered_json report_to_json(const ExperimentReport& report) {
  nlohmann::ordered_json j;
  j["experiment"] = report.experiment;
  j["config"] = report.config_echo;
  j["verdict"] = report.pass ? "pass" : "fail";
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const CaseRow& r : report.rows) {
    nlohmann::ordered_json row;
    row["case"] = r.label;
    row["value"] = r.value;
    row["expected"] = r.expected;
    row["tolerance"] = r.tolerance;
    row["tolerance_name"] = r.tolerance_name;
    row["pass"] = r.pass;
    row["note"] = r.note;
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  nlohmann::ordered_json series;
  for (const auto& [name, points] : report.series) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& p : points) arr.push_back({p[0], p[1]});
    series[name] = std::move(arr);
  }
  j["series"] = std::move(series);
  return j;
}

inline ExperimentReport load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("report: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("report: JSON parse error: ") + e.what());
  }
  ExperimentReport report;
  report.experiment = j.value("experiment", std::string());
  report.pass = j.value("verdict", std::string()) == "pass";
  if (j.contains("config")) report.config_echo = j["config"];
  if (j.contains("rows"))
    for (const auto& row : j["rows"]) {
      CaseRow r;
      r.label = row.value("case", std::string());
      r.value = row.value("value", 0.0);
      r.expected = row.value("expected", 0.0);
      r.tolerance = row.value("tolerance", 0.0);
      r.tolerance_name = row.value("tolerance_name", std::string());
      r.pass = row.value("pass", false);
      r.note = row.value("note", std::string());
      report.rows.push_back(std::move(r));
    }
  if (j.contains("series"))
    for (auto it = j["series"].begin(); it != j["series"].end(); ++it) {
      auto& points = report.series[it.key()];
      for (const auto& p : it.value())
        points.push_back({p[0].get<double>(), p[1].get<double>()});
    }
  return report;
}

// Writes report.csv and report.json under `dir`.  Plain snprintf formatting
// keeps the files byte-stable for identical inputs.
inline void write_report(const ExperimentReport& report, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::string csv_path = dir + "/report.csv";
  std::ofstream csv(csv_path);
  if (!csv) throw ConfigError("report: cannot write " + csv_path);
  csv << "experiment,case,value,expected,tolerance,tolerance_name,pass,note\n";
  for (const CaseRow& r : report.rows) {
    csv << report.experiment << ',' << r.label << ',' << detail::fmt(r.value)
        << ',' << detail::fmt(r.expected) << ',' << detail::fmt(r.tolerance)
        << ',' << r.tolerance_name << ',' << (r.pass ? "pass" : "fail") << ','
        << r.note << '\n';
  }
  if (!csv) throw ConfigError("report: write failed for " + csv_path);
  const std::string json_path = dir + "/report.json";
  std::ofstream js(json_path);
  if (!js) throw ConfigError("report: cannot write " + json_path);
  js << report_to_json(report).dump(2) << '\n';
  if (!js) throw ConfigError("report: write failed for " + json_path);
}

// One plot series as plain text: a '#' header, then "x value" rows.
inline void emit_plot_data(const ExperimentReport& report, const std::string& what,
                           std::ostream& out) {
  auto it = report.series.find(what);
  if (it == report.series.end()) {
    std::string known;
    for (const auto& [name, pts] : report.series)
      known += (known.empty() ? "" : ", ") + name;
    throw ConfigError("emit_plot_data: unknown series '" + what +
                      "' (available: " + (known.empty() ? "none" : known) + ")");
  }
  out << "# " << report.experiment << ": " << what << '\n';
  for (const auto& p : it->second)
    out << detail::fmt(p[0]) << ' ' << detail::fmt(p[1]) << '\n';
}

inline void emit_plot_data(const ExperimentReport& report, const std::string& what,
                           const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("emit_plot_data: cannot write " + path);
  emit_plot_data(report, what, out);
  if (!out) throw ConfigError("emit_plot_data: write failed for " + path);
}

}  // namespace percr
