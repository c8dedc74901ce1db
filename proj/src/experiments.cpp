#include "fkpz/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

#include "fkpz/csvio.hpp"
#include "fkpz/diagnostics.hpp"
#include "fkpz/heatkernel.hpp"
#include "fkpz/kpz.hpp"
#include "fkpz/linsolve.hpp"

namespace fkpz {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string iso_now() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%FT%TZ", std::gmtime(&t));
  return buf;
}

void write_manifest_atomically(const std::string& dir, const json& manifest) {
  fs::create_directories(dir);
  std::string tmp = dir + "/manifest.json.tmp";
  {
    std::ofstream os(tmp);
    os << manifest.dump(2) << "\n";
  }
  fs::rename(tmp, dir + "/manifest.json");
}

struct Workbench {
  DomainGrid grid;
  OperatorMatrix op;
  KernelBundle bundle;
};

// Grid + operator + full spectrum for the configured physics.
std::unique_ptr<Workbench> make_bench(const ExperimentConfig& cfg, double h_override = 0.0) {
  auto wb = std::make_unique<Workbench>(Workbench{
      build_grid(cfg.dimension, cfg.shape, h_override > 0.0 ? h_override : cfg.h),
      OperatorMatrix{}, KernelBundle{}});
  FracParams params{cfg.s, cfg.dimension, cfg.convention};
  wb->op = assemble(wb->grid, params);
  wb->bundle = eigendecompose(wb->op, wb->grid.node_count());
  return wb;
}

Field field_from_expr(const DomainGrid& grid, const std::optional<Expr>& e, double t = 0.0) {
  if (!e) return Field(grid);
  auto fn = bind_formula(grid, *e);
  return sample_function(grid, [&](const Point& p) { return fn(p, t); });
}

SourceFn source_from_expr(const DomainGrid& grid, const std::optional<Expr>& e) {
  if (!e) return SourceFn();
  return bind_formula(grid, *e);
}

Field near_delta(const DomainGrid& grid) {
  // Unit L1 mass at the node closest to the origin.
  int best = 0;
  double bestr = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid.node_count(); ++i) {
    double r = std::hypot(grid.node(i)[0], grid.node(i)[1]);
    if (r < bestr) {
      bestr = r;
      best = i;
    }
  }
  Field f(grid);
  f.values[best] = 1.0 / grid.cell_volume();
  return f;
}

double space_lp(const DomainGrid& g, const Eigen::VectorXd& v, double p) {
  double acc = 0.0;
  for (int i = 0; i < v.size(); ++i) acc += std::pow(std::abs(v[i]), p);
  return std::pow(acc * g.cell_volume(), 1.0 / p);
}

json run_calibrate(const ExperimentConfig& cfg, RunOutcome& out) {
  FracParams params{cfg.s, cfg.dimension, cfg.convention};
  std::vector<std::array<double, 2>> modes;
  if (cfg.dimension == 1)
    modes = {{0, 0}, {1, 0}, {2, 0}, {3, 0}};
  else
    modes = {{0, 0}, {1, 0}, {1, 1}, {2, 0}};
  int lattice = cfg.raw.get_int_or("run.lattice", cfg.dimension == 1 ? 256 : 64);
  auto samples = symbol_calibration(params, modes, lattice);

  fs::create_directories(cfg.out_dir);
  std::string csv = cfg.out_dir + "/calibration.csv";
  CsvWriter w(csv, {"k1", "k2", "measured", "exact", "rel_err"});
  double worst = 0.0;
  json per_mode = json::array();
  for (const auto& s : samples) {
    w.row({s.k[0], s.k[1], s.measured, s.exact, s.rel_err});
    if (s.exact > 0.0) worst = std::max(worst, s.rel_err);
    per_mode.push_back({{"k", {s.k[0], s.k[1]}}, {"rel_err", s.rel_err}});
  }
  out.csv_files.push_back(csv);
  return {{"lattice", lattice}, {"max_rel_err", worst}, {"modes", per_mode}};
}

json run_kernel_check(const ExperimentConfig& cfg, RunOutcome& out) {
  auto bench = make_bench(cfg);
  std::vector<double> times = cfg.raw.has("run.times")
                                  ? cfg.raw.get_number_list("run.times")
                                  : std::vector<double>{0.01, 0.1, 0.5};
  int pairs = cfg.raw.get_int_or("run.pairs", 800);
  ComparisonProfile prof = validate_kernel_bounds(bench->bundle, times, pairs, cfg.seed);

  fs::create_directories(cfg.out_dir);
  std::string csv = cfg.out_dir + "/kernel_bounds.csv";
  CsvWriter w(csv, {"t", "x_index", "y_index", "P", "rhs_green1", "ratio"});
  for (const auto& s : prof.samples)
    w.row({s.t, double(s.x_index), double(s.y_index), s.p, s.rhs, s.ratio});
  std::string sum = cfg.out_dir + "/kernel_bounds_summary.csv";
  CsvWriter ws(sum, {"c_low", "c_high", "spread"});
  ws.row({prof.c_low, prof.c_high, prof.spread()});
  out.csv_files.push_back(csv);
  out.csv_files.push_back(sum);

  auto grad = kernel_gradient_bound(bench->bundle, times);
  return {{"c_low", prof.c_low},
          {"c_high", prof.c_high},
          {"spread", prof.spread()},
          {"gradient_bound_c", grad.c_fit},
          {"mass_integral_c", mass_integral_constant(bench->bundle, times.back())}};
}

json run_green_check(const ExperimentConfig& cfg, RunOutcome& out) {
  auto bench = make_bench(cfg);
  Eigen::MatrixXd G = green_function(bench->bundle);
  GreenBoundReport rep =
      validate_green_bounds(G, bench->grid, bench->op.params, cfg.raw.get_int_or("run.pairs", 800),
                            cfg.seed);
  fs::create_directories(cfg.out_dir);
  std::string sum = cfg.out_dir + "/green_bounds_summary.csv";
  CsvWriter ws(sum, {"c_low", "c_high", "spread"});
  ws.row({rep.c_low, rep.c_high, rep.spread()});
  out.csv_files.push_back(sum);

  json headline{{"c_low", rep.c_low}, {"c_high", rep.c_high}, {"spread", rep.spread()}};

  // Boundary exponent of the torsion function G 1; needs a grid fine enough
  // for at least four populated geometric bands.
  auto bands = geometric_bands(bench->grid);
  if (bands.size() >= 4) {
    Field torsion(bench->grid,
                  green_apply(bench->grid, G, Eigen::VectorXd::Ones(bench->grid.node_count())));
    BoundaryExponent be = boundary_exponent(torsion, bands);
    std::string bands_csv = cfg.out_dir + "/torsion_bands.csv";
    CsvWriter wb(bands_csv, {"band_lo", "band_hi", "mean_u", "fitted_slope", "r2"});
    for (const auto& row : be.rows)
      wb.row({row.band.lo, row.band.hi, row.mean_u, be.fit.slope, be.fit.r2});
    out.csv_files.push_back(bands_csv);
    headline["torsion_boundary_slope"] = be.fit.slope;
    headline["torsion_fit_r2"] = be.fit.r2;
  }
  return headline;
}

LinearProblem linear_from_cfg(const ExperimentConfig& cfg, const Workbench& bench) {
  LinearProblem P;
  P.bundle = &bench.bundle;
  P.source = source_from_expr(bench.grid, cfg.f);
  P.u0 = cfg.u0 ? field_from_expr(bench.grid, cfg.u0) : Field(bench.grid);
  P.T = cfg.T;
  P.m = cfg.m;
  P.rho = cfg.rho;
  P.beta = cfg.beta;
  return P;
}

json run_solve_linear(const ExperimentConfig& cfg, RunOutcome& out) {
  auto bench = make_bench(cfg);
  LinearProblem P = linear_from_cfg(cfg, *bench);
  SpaceTimeField u = solve_imex(P, cfg.dt);

  fs::create_directories(cfg.out_dir);
  std::string csv = cfg.out_dir + "/linear_norms.csv";
  CsvWriter w(csv, {"t", "u_l1", "u_l2", "u_over_ds_l2", "grad_l2"});
  const DomainGrid& g = bench->grid;
  for (int j = 0; j < u.level_count(); ++j) {
    Field lvl = u.at(j);
    double hardy = norm(lvl, {NormKind::Weighted, 2.0, -2.0 * cfg.s});
    double grad = norm(lvl, {NormKind::Bochner, 2.0});
    w.row({u.times[j], space_lp(g, lvl.values, 1.0), space_lp(g, lvl.values, 2.0), hardy, grad});
  }
  out.csv_files.push_back(csv);

  const int N = g.dim();
  double frontier = (N + 2.0 * cfg.s) / (N + 1.0);
  RegularityReport rep = regularity_report(
      u, P, {0.9 * frontier, frontier * 1.1}, {2.0}, {2.0}, {1.0});
  json flags = json::array();
  for (const auto& e : rep.gradient)
    flags.push_back({{"q", e.exponent}, {"value", e.value}, {"admissible", e.admissible}});
  return {{"u_norm_m", rep.u_norm_m},
          {"gradient_frontier", rep.gradient_frontier},
          {"gradient_norms", flags}};
}

json run_decay(const ExperimentConfig& cfg, RunOutcome& out) {
  auto bench = make_bench(cfg);
  LinearProblem P;
  P.bundle = &bench->bundle;
  P.u0 = cfg.u0 ? field_from_expr(bench->grid, cfg.u0) : near_delta(bench->grid);
  P.T = cfg.T;
  P.rho = cfg.rho;
  double r = cfg.raw.get_number_or("run.r", 2.0);
  double t0 = cfg.raw.get_number_or("run.t_min", 0.02);
  double t1 = cfg.raw.get_number_or("run.t_max", 0.12);
  int npts = cfg.raw.get_int_or("run.points", 8);
  std::vector<double> times;
  for (int i = 0; i < npts; ++i)
    times.push_back(t0 * std::pow(t1 / t0, double(i) / (npts - 1)));
  DecayStudy d = decay_study(P, cfg.rho, r, times);

  fs::create_directories(cfg.out_dir);
  std::string csv = cfg.out_dir + "/decay.csv";
  CsvWriter w(csv, {"t", "norm"});
  for (size_t i = 0; i < d.times.size(); ++i) w.row({d.times[i], d.norms[i]});
  out.csv_files.push_back(csv);
  return {{"slope", d.fit.slope},
          {"predicted", d.predicted},
          {"r2", d.fit.r2},
          {"rho", cfg.rho},
          {"r", r}};
}

KpzProblem kpz_from_cfg(const ExperimentConfig& cfg, const Workbench& bench) {
  KpzProblem P;
  P.bundle = &bench.bundle;
  P.alpha = cfg.alpha;
  P.source = source_from_expr(bench.grid, cfg.f);
  P.u0 = cfg.u0 ? field_from_expr(bench.grid, cfg.u0) : Field(bench.grid);
  P.T = cfg.T;
  P.m = cfg.m;
  return P;
}

json run_solve_kpz(const ExperimentConfig& cfg, RunOutcome& out) {
  auto bench = make_bench(cfg);
  KpzProblem P = kpz_from_cfg(cfg, *bench);
  AlphaThresholds th = alpha_thresholds(cfg.dimension, cfg.s);
  json info{{"regime", regime_name(P.regime())},
            {"alpha", cfg.alpha},
            {"thresholds",
             {{"subcritical", th.subcritical},
              {"weighted", th.weighted},
              {"nonexistence", th.nonexistence}}}};

  if (P.regime() == AlphaRegime::Nonexistence) {
    // Refinement-divergence diagnostic: the gradient norm at exponent alpha
    // has no stable limit when alpha(1-s) > 1.
    auto fine = make_bench(cfg, cfg.h / 2.0);
    KpzProblem Pf = kpz_from_cfg(cfg, *fine);
    double a_reg = cfg.raw.get_number_or("run.a_reg", 1e-3);
    SpaceTimeField uc = regularized_solve(P, a_reg, cfg.dt);
    SpaceTimeField uf = regularized_solve(Pf, a_reg, cfg.dt);
    double nc = norm(uc, {NormKind::Bochner, cfg.alpha});
    double nf = norm(uf, {NormKind::Bochner, cfg.alpha});
    double growth = nf / nc - 1.0;
    auto scan_rows = divergence_scan(cfg.s, {cfg.alpha},
                                     {1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128},
                                     cfg.dimension, cfg.shape);
    info["gradient_norm_growth_per_halving"] = growth;
    info["shell_exponent_fitted"] = scan_rows[0].fitted;
    info["shell_exponent_predicted"] = scan_rows[0].predicted;
    out.verdict = "nonexistence-consistent divergence";
    out.exit_code = 2;
    return info;
  }

  PicardResult res = picard_solve(P, cfg.raw.get_number_or("run.tol", 1e-6),
                                  cfg.raw.get_int_or("run.max_iter", 60), 0.5,
                                  cfg.raw.get_int_or("run.levels", 32));
  fs::create_directories(cfg.out_dir);
  std::string csv = cfg.out_dir + "/picard_residuals.csv";
  CsvWriter w(csv, {"iteration", "residual", "e_r_norm"});
  for (size_t i = 0; i < res.state.residuals.size(); ++i)
    w.row({double(i + 1), res.state.residuals[i], res.state.e_r_norms[i]});
  out.csv_files.push_back(csv);

  switch (res.state.status) {
    case IterationStatus::Converged: out.verdict = "converged"; break;
    case IterationStatus::Diverged:
      out.verdict = "diverged";
      out.exit_code = P.regime() == AlphaRegime::SubcriticalL1 ? 1 : 2;
      break;
    case IterationStatus::MaxIterExceeded:
      out.verdict = "max-iter";
      out.exit_code = 1;
      break;
  }
  info["iterations"] = res.state.iterations;
  info["final_residual"] = res.state.residuals.empty() ? 0.0 : res.state.residuals.back();
  info["u_l1_final"] = res.u.levels.back().cwiseAbs().sum() * bench->grid.cell_volume();
  return info;
}

json run_drift(const ExperimentConfig& cfg, RunOutcome& out) {
  auto bench = make_bench(cfg);
  DriftProblem D;
  D.bundle = &bench->bundle;
  auto b1 = source_from_expr(bench->grid, cfg.B1);
  auto b2 = source_from_expr(bench->grid, cfg.B2);
  D.B = [b1, b2](const Point& p, double t) {
    return std::array<double, 2>{b1 ? b1(p, t) : 0.0, b2 ? b2(p, t) : 0.0};
  };
  D.source = source_from_expr(bench->grid, cfg.f);
  D.u0 = cfg.u0 ? field_from_expr(bench->grid, cfg.u0) : Field(bench->grid);
  D.T = cfg.T;
  SpaceTimeField u = drift_solve(D, cfg.dt);

  fs::create_directories(cfg.out_dir);
  std::string csv = cfg.out_dir + "/drift_norms.csv";
  CsvWriter w(csv, {"t", "u_l1", "u_min"});
  for (int j = 0; j < u.level_count(); ++j)
    w.row({u.times[j], u.levels[j].cwiseAbs().sum() * bench->grid.cell_volume(),
           u.levels[j].minCoeff()});
  out.csv_files.push_back(csv);

  // Two initializations of the fixed-point form coincide in the uniqueness
  // regime.
  double tol = cfg.raw.get_number_or("run.tol", 1e-8);
  SpaceTimeField va = drift_fixed_point(D, cfg.dt, Field(bench->grid), tol, 50);
  Field ones(bench->grid, Eigen::VectorXd::Ones(bench->grid.node_count()));
  SpaceTimeField vb = drift_fixed_point(D, cfg.dt, ones, tol, 50);
  double gap = 0.0;
  for (int j = 0; j < va.level_count(); ++j)
    gap = std::max(gap,
                   (va.levels[j] - vb.levels[j]).cwiseAbs().sum() * bench->grid.cell_volume());
  return {{"uniqueness_regime", D.uniqueness_regime()},
          {"two_init_gap", gap},
          {"u_min", u.levels.back().minCoeff()}};
}

json run_blowup(const ExperimentConfig& cfg, RunOutcome& out) {
  auto bench = make_bench(cfg);
  KpzProblem P = kpz_from_cfg(cfg, *bench);
  KpzRunResult res = kpz_imex_solve(P, cfg.dt, true);

  fs::create_directories(cfg.out_dir);
  std::string csv = cfg.out_dir + "/blowup_y.csv";
  CsvWriter w(csv, {"t", "Y", "residual"});
  for (size_t j = 0; j < res.monitor.Y.size(); ++j)
    w.row({res.monitor.times[j], res.monitor.Y[j],
           j < res.monitor.residual.size() ? res.monitor.residual[j] : 0.0});
  out.csv_files.push_back(csv);

  if (res.monitor.blowup) {
    out.verdict = "blowup";
    out.exit_code = 2;
  }
  return {{"blowup", res.monitor.blowup},
          {"threshold", res.monitor.threshold},
          {"c_hat", res.monitor.c_hat},
          {"lambda1", res.monitor.lambda1},
          {"y_final", res.monitor.Y.empty() ? 0.0 : res.monitor.Y.back()},
          {"completed", res.completed}};
}

json run_nonexistence_scan(const ExperimentConfig& cfg, RunOutcome& out) {
  std::vector<double> alphas = cfg.raw.has("run.alphas") ? cfg.raw.get_number_list("run.alphas")
                                                         : std::vector<double>{3.0, 4.0, 5.0};
  std::vector<double> hs = cfg.raw.has("run.hs")
                               ? cfg.raw.get_number_list("run.hs")
                               : std::vector<double>{1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64,
                                                     1.0 / 128};
  auto rows = divergence_scan(cfg.s, alphas, hs, cfg.dimension, cfg.shape);

  fs::create_directories(cfg.out_dir);
  std::string csv = cfg.out_dir + "/divergence_scan.csv";
  CsvWriter w(csv, {"alpha", "fitted_exponent", "predicted_exponent", "convergent"});
  json per = json::array();
  for (const auto& r : rows) {
    w.row({r.alpha, r.fitted, r.predicted, r.convergent ? 1.0 : 0.0});
    per.push_back({{"alpha", r.alpha},
                   {"fitted", r.fitted},
                   {"predicted", r.predicted},
                   {"convergent", r.convergent}});
  }
  out.csv_files.push_back(csv);

  // Hopf lower-bound stability for f == 1 across one refinement.
  auto bench = make_bench(cfg);
  auto fine = make_bench(cfg, cfg.h / 2.0);
  auto solve_c = [&](Workbench& b) {
    LinearProblem P;
    P.bundle = &b.bundle;
    P.source = [](const Point&, double) { return 1.0; };
    P.u0 = Field(b.grid);
    P.T = cfg.T;
    SpaceTimeField u = solve_imex(P, cfg.dt);
    return hopf_check(u, 0.5 * cfg.T, cfg.s);
  };
  double c_coarse = solve_c(*bench);
  double c_fine = solve_c(*fine);
  return {{"scan", per}, {"hopf_c_coarse", c_coarse}, {"hopf_c_fine", c_fine}};
}

}  // namespace

RunOutcome run_experiment(const ExperimentConfig& cfg) {
  RunOutcome out;
  json manifest;
  manifest["config"] = cfg.raw.raw();
  manifest["version"] = kVersion;
  manifest["csv_schema_version"] = kCsvSchemaVersion;
  manifest["started"] = iso_now();

  json headline;
  switch (cfg.kind) {
    case ExperimentKind::Calibrate: headline = run_calibrate(cfg, out); break;
    case ExperimentKind::KernelCheck: headline = run_kernel_check(cfg, out); break;
    case ExperimentKind::GreenCheck: headline = run_green_check(cfg, out); break;
    case ExperimentKind::SolveLinear: headline = run_solve_linear(cfg, out); break;
    case ExperimentKind::Decay: headline = run_decay(cfg, out); break;
    case ExperimentKind::SolveKpz: headline = run_solve_kpz(cfg, out); break;
    case ExperimentKind::Drift: headline = run_drift(cfg, out); break;
    case ExperimentKind::Blowup: headline = run_blowup(cfg, out); break;
    case ExperimentKind::NonexistenceScan: headline = run_nonexistence_scan(cfg, out); break;
    case ExperimentKind::ScanAlpha: {
      std::vector<double> alphas = cfg.raw.has("run.alphas")
                                       ? cfg.raw.get_number_list("run.alphas")
                                       : std::vector<double>{1.05, 1.1, 1.5, 2.0, 3.5, 4.5};
      ExperimentConfig base = cfg;
      base.raw.set("run.kind", "solve-kpz");
      base.kind = ExperimentKind::SolveKpz;
      return scan(base, "alpha", alphas);
    }
  }
  manifest["verdict"] = out.verdict;
  manifest["exit_code"] = out.exit_code;
  manifest["headline"] = headline;
  manifest["csv_files"] = out.csv_files;
  manifest["finished"] = iso_now();
  write_manifest_atomically(cfg.out_dir, manifest);
  out.manifest = manifest;
  return out;
}

RunOutcome run_config_file(const std::string& path) {
  try {
    ExperimentConfig cfg = ExperimentConfig::load(path);
    return run_experiment(cfg);
  } catch (const Error& e) {
    RunOutcome out;
    out.exit_code = 1;
    out.verdict = std::string("error: ") + e.what();
    return out;
  }
}

RunOutcome scan(const ExperimentConfig& base, const std::string& param,
                const std::vector<double>& values) {
  if (values.empty()) throw ConfigInvalid("scan: empty sweep list");
  std::string key;
  if (param == "alpha")
    key = "physics.alpha";
  else if (param == "s")
    key = "physics.s";
  else if (param == "h")
    key = "grid.h";
  else if (param == "m")
    key = "data.m";
  else
    throw ConfigInvalid("scan: parameter must be one of alpha, s, h, m");

  int threads = 1;
  if (const char* env = std::getenv("FKPZ_THREADS")) threads = std::max(1, std::atoi(env));

  struct Sub {
    double value;
    RunOutcome outcome;
  };
  std::vector<Sub> subs(values.size());
  auto run_one = [&](size_t idx) {
    KeyTree tree = base.raw;
    std::ostringstream v;
    v.precision(17);
    v << values[idx];
    tree.set(key, v.str());
    tree.set("output.dir", base.out_dir + "/" + param + "_" + v.str());
    ExperimentConfig sub = ExperimentConfig::from_tree(tree);
    subs[idx] = {values[idx], run_experiment(sub)};
  };
  for (size_t i = 0; i < values.size(); i += threads) {
    std::vector<std::future<void>> batch;
    for (size_t j = i; j < std::min(values.size(), i + threads); ++j)
      batch.push_back(std::async(std::launch::async, run_one, j));
    for (auto& f : batch) f.get();
  }

  // Designated headline scalar per kind, used for the h-sweep order fit.
  auto headline_value = [](const json& m) -> double {
    if (!m.contains("headline")) return std::nan("");
    const json& h = m["headline"];
    for (const char* key : {"u_norm_m", "slope", "spread", "max_rel_err", "two_init_gap",
                            "y_final", "u_l1_final", "hopf_c_fine"})
      if (h.contains(key) && h[key].is_number()) return h[key].get<double>();
    return std::nan("");
  };

  fs::create_directories(base.out_dir);
  RunOutcome out;
  std::string csv = base.out_dir + "/scan_summary.csv";
  AlphaThresholds th = alpha_thresholds(base.dimension, base.s);
  CsvWriter w(csv, {param, "exit_code", "regime_code", "threshold_subcritical",
                    "threshold_weighted", "threshold_nonexistence", "headline_value"});
  json merged = json::array();
  std::vector<double> hv(subs.size());
  for (size_t i = 0; i < subs.size(); ++i) {
    const auto& sub = subs[i];
    double s_here = param == "s" ? sub.value : base.s;
    double alpha_here = param == "alpha" ? sub.value : base.alpha;
    AlphaThresholds t = alpha_thresholds(base.dimension, s_here);
    double regime = static_cast<double>(classify_alpha(alpha_here, base.dimension, s_here));
    hv[i] = headline_value(sub.outcome.manifest);
    w.row({sub.value, double(sub.outcome.exit_code), regime, t.subcritical, t.weighted,
           t.nonexistence, hv[i]});
    merged.push_back({{"value", sub.value},
                      {"verdict", sub.outcome.verdict},
                      {"exit_code", sub.outcome.exit_code},
                      {"headline_value", hv[i]}});
    if (sub.outcome.exit_code == 1) out.exit_code = 1;
  }
  out.csv_files.push_back(csv);
  out.verdict = "scan complete";

  // h sweep: fitted convergence order of the headline scalar against the
  // finest-grid value.
  json convergence;
  if (param == "h" && subs.size() >= 3) {
    size_t finest = 0;
    for (size_t i = 1; i < subs.size(); ++i)
      if (subs[i].value < subs[finest].value) finest = i;
    std::vector<double> xs, ys;
    for (size_t i = 0; i < subs.size(); ++i) {
      if (i == finest || std::isnan(hv[i]) || std::isnan(hv[finest])) continue;
      double err = std::abs(hv[i] - hv[finest]);
      if (err > 0.0) {
        xs.push_back(subs[i].value);
        ys.push_back(err);
      }
    }
    if (xs.size() >= 2) {
      ExponentFit fit = fit_loglog(xs, ys);
      convergence = {{"order", fit.slope}, {"r2", fit.r2}};
    }
  }

  json manifest;
  manifest["config"] = base.raw.raw();
  manifest["version"] = kVersion;
  manifest["sweep"] = {{"param", param}, {"values", values}};
  manifest["thresholds"] = {{"subcritical", th.subcritical},
                            {"weighted", th.weighted},
                            {"nonexistence", th.nonexistence}};
  manifest["sub_runs"] = merged;
  if (!convergence.is_null()) manifest["convergence"] = convergence;
  manifest["csv_files"] = out.csv_files;
  manifest["finished"] = iso_now();
  write_manifest_atomically(base.out_dir, manifest);
  out.manifest = manifest;
  return out;
}

RunOutcome scan_config_file(const std::string& path, const std::string& param,
                            const std::vector<double>& values) {
  try {
    ExperimentConfig cfg = ExperimentConfig::load(path);
    return scan(cfg, param, values);
  } catch (const Error& e) {
    RunOutcome out;
    out.exit_code = 1;
    out.verdict = std::string("error: ") + e.what();
    return out;
  }
}

}  // namespace fkpz
