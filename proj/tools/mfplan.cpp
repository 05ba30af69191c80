// mfplan command-line driver: gen, solve, kl, diagnose, trace.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mfplan/densities.hpp"
#include "mfplan/dual.hpp"
#include "mfplan/error.hpp"
#include "mfplan/io.hpp"
#include "mfplan/lagrangian.hpp"
#include "mfplan/metrics.hpp"
#include "mfplan/parallel.hpp"
#include "mfplan/primal.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mfplan;

namespace {

constexpr int kExitError = 2;
constexpr int kExitCertificate = 3;

enum class Level { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

struct Globals {
  int threads = 1;
  std::string out = ".";
  std::string log_level = "info";
  double tol_gap = 1e-2;
  double tol_residual = 1e-9;
  double tol_hj = 1e-3;
  std::vector<std::string> argv;
};

Level level_of(const std::string& s) {
  if (s == "error") return Level::kError;
  if (s == "warn") return Level::kWarn;
  if (s == "info") return Level::kInfo;
  if (s == "debug") return Level::kDebug;
  fail(ErrorCode::kInvalidArgument, "unknown log level '" + s + "'");
}

Level g_level = Level::kInfo;

void log(Level lv, const std::string& msg) {
  static const char* names[] = {"error", "warn", "info", "debug"};
  if (lv <= g_level) std::cerr << "[" << names[static_cast<int>(lv)] << "] " << msg << "\n";
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

void emit_error(const std::string& code, const std::string& message) {
  const json j = {{"error", {{"code", code}, {"message", message}}}};
  std::cerr << j.dump() << "\n";
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorCode::kIo, "cannot create directory '" + dir.string() + "'");
}

json manifest(const Globals& gl, const std::string& command, const json& inputs, const json& seeds,
              const std::string& config_text) {
  return {{"tool", "mfplan"},
          {"version", MFPLAN_VERSION},
          {"command", command},
          {"argv", gl.argv},
          {"threads", gl.threads},
          {"config_hash", fnv1a_hex(config_text)},
          {"inputs", inputs},
          {"seeds", seeds},
          {"tolerances",
           {{"gap", gl.tol_gap}, {"residual", gl.tol_residual}, {"hj", gl.tol_hj}}}};
}

json file_entry(const fs::path& p) {
  return {{"path", p.string()}, {"fnv1a", fnv1a_hex(read_text(p))}};
}

json field_entry(const fs::path& p) {
  json e = file_entry(p);
  e["header_fnv1a"] = fnv1a_hex(read_text(fs::path(p.string() + ".json")));
  return e;
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

// ---------------------------------------------------------------- gen

struct GenArgs {
  std::string kind = "gaussian";
  std::string grid;
  int d = 1, nx = 64, nt = 32;
  double R = 2.0;
  std::vector<double> center{0.0}, center2{0.5}, lo{-0.5}, hi{0.5};
  double sigma = 0.2, weight = 0.5, radius = 1.0, width = 0.2, noise = 0.0;
  std::uint64_t seed = 0;
  std::string name = "density";
  bool csv = false;
};

Vec vec_of(const std::vector<double>& v, int d, const char* what) {
  require(static_cast<int>(v.size()) == d || v.size() == 1, ErrorCode::kInvalidArgument,
          std::string(what) + ": expected " + std::to_string(d) + " components");
  return {v[0], d == 2 ? (v.size() == 2 ? v[1] : v[0]) : 0.0};
}

int run_gen(const Globals& gl, const GenArgs& a) {
  GridSpec g;
  if (!a.grid.empty()) {
    g = grid_from_json(read_text(a.grid));
  } else {
    g = GridSpec{a.d, a.nt, a.nx, a.R};
    g.validate();
  }
  Density m;
  if (a.kind == "gaussian") {
    m = gaussian_density(g, vec_of(a.center, g.d, "center"), a.sigma);
  } else if (a.kind == "box") {
    m = box_density(g, vec_of(a.lo, g.d, "lo"), vec_of(a.hi, g.d, "hi"));
  } else if (a.kind == "bimodal") {
    m = bimodal_density(g, vec_of(a.center, g.d, "center"), vec_of(a.center2, g.d, "center2"),
                        a.sigma, a.weight);
  } else if (a.kind == "ring") {
    m = ring_density(g, a.radius, a.width);
  } else {
    fail(ErrorCode::kInvalidArgument, "unknown density kind '" + a.kind + "'");
  }
  jitter_density(m, a.noise, a.seed);
  const fs::path dir = gl.out;
  ensure_dir(dir);
  const fs::path file = dir / (a.name + ".field");
  write_field(file, to_field_file(m));
  if (a.csv && g.d == 1) write_field_csv(dir / (a.name + ".csv"), to_field_file(m));
  json params = {{"kind", a.kind}, {"sigma", a.sigma}, {"center", a.center}, {"center2", a.center2},
                 {"lo", a.lo}, {"hi", a.hi}, {"weight", a.weight}, {"radius", a.radius},
                 {"width", a.width}, {"noise", a.noise}, {"grid", json::parse(grid_to_json(g))}};
  write_json(dir / (a.name + ".manifest.json"),
             manifest(gl, "gen", {{"output", field_entry(file)}}, {{"noise", a.seed}}, params.dump()));
  log(Level::kInfo, "wrote " + file.string() + " (mass " + fmt(m.mass()) + ")");
  return 0;
}

// ---------------------------------------------------------------- solve / diagnose

json certificates(const Globals& gl, const DiagnosticsReport& r) {
  const double scale = std::max(1.0, std::abs(r.B));
  const json checks = {
      {"relative_gap", {{"value", r.relative_gap}, {"limit", gl.tol_gap}}},
      {"yh_integral", {{"value", r.yh_integral}, {"limit", gl.tol_hj * scale}}},
      {"yf_integral", {{"value", r.yf_integral}, {"limit", gl.tol_hj * scale}}},
      {"hj_violation_support", {{"value", r.hj_violation_support}, {"limit", gl.tol_hj * scale}}},
      {"continuity_residual", {{"value", r.continuity_residual}, {"limit", gl.tol_residual}}},
      {"mass_drift", {{"value", r.mass_drift}, {"limit", gl.tol_residual}}},
      {"identity_error", {{"value", r.identity_error}, {"limit", gl.tol_residual}}}};
  json out = json::object();
  bool all = true;
  for (const auto& [name, c] : checks.items()) {
    const double v = c.at("value").get<double>(), lim = c.at("limit").get<double>();
    const bool pass = std::isfinite(v) && v <= lim;
    all = all && pass;
    out[name] = {{"value", v}, {"limit", lim}, {"pass", pass}};
  }
  out["all_pass"] = all;
  return out;
}

json full_report(const Globals& gl, const ModelSpec& model, const Solution& s) {
  const DiagnosticsReport r = duality_report(model, s);
  json j = json::parse(report_to_json(r));
  j["apriori"] = json::parse(apriori_to_json(apriori_check(model, s)));
  j["certificates"] = certificates(gl, r);
  return j;
}

struct RunFiles {
  fs::path dir;
  fs::path model() const { return dir / "model.json"; }
  fs::path grid() const { return dir / "grid.json"; }
  fs::path config() const { return dir / "config.json"; }
  fs::path m0() const { return dir / "m0.field"; }
  fs::path m1() const { return dir / "m1.field"; }
  fs::path solution() const { return dir / "solution.json"; }
};

Solution load_solution(const RunFiles& run, ModelSpec& model) {
  model = model_from_json(read_text(run.model()), run.dir);
  const json meta = json::parse(read_text(run.solution()));
  Solution s;
  s.m = slices_from(read_field(run.dir / "m.field"));
  s.grid = s.m.grid();
  s.w = momentum_from(read_field(run.dir / "w.field"));
  s.u = cells_from(read_field(run.dir / "u.field"));
  s.alpha = slices_from(read_field(run.dir / "alpha.field"));
  require_same_grid(s.grid, s.w.grid(), "run directory");
  require_same_grid(s.grid, s.u.grid(), "run directory");
  require_same_grid(s.grid, s.alpha.grid(), "run directory");
  s.m0.assign(s.m.slice(0).begin(), s.m.slice(0).end());
  s.m1.assign(s.m.slice(s.grid.nt).begin(), s.m.slice(s.grid.nt).end());
  s.iterations = meta.at("iterations").get<int>();
  s.converged = meta.at("converged").get<bool>();
  s.restoration_blend = meta.at("restoration_blend").get<double>();
  s.operator_norm = meta.at("operator_norm").get<double>();
  s.tau = meta.at("tau").get<double>();
  s.sigma = meta.at("sigma").get<double>();
  s.delta = meta.at("delta").get<double>();
  s.seconds = meta.at("seconds").get<double>();
  s.history = read_history_csv(run.dir / "history.csv");
  s.v = recover_velocity(s.m, s.w, s.delta);
  return s;
}

struct SolveArgs {
  std::string model, grid, m0, m1, config;
  bool csv = false;
};

int run_solve(const Globals& gl, const SolveArgs& a) {
  const ModelSpec model = model_from_json(read_text(a.model), fs::path(a.model).parent_path());
  const GridSpec grid = grid_from_json(read_text(a.grid));
  const Density m0 = density_from(read_field(a.m0)), m1 = density_from(read_field(a.m1));
  require(m0.grid.d == grid.d && m0.grid.nx == grid.nx && m0.grid.R == grid.R, ErrorCode::kShapeMismatch,
          "m0 does not match the grid");
  require(m1.grid.d == grid.d && m1.grid.nx == grid.nx && m1.grid.R == grid.R, ErrorCode::kShapeMismatch,
          "m1 does not match the grid");
  SolverConfig config;
  if (!a.config.empty()) config = config_from_json(read_text(a.config));
  if (g_level >= Level::kDebug) {
    config.on_check = [](const HistoryEntry& h) {
      log(Level::kDebug, "it " + std::to_string(h.iteration) + " B " + fmt(h.B) + " A " + fmt(h.A) +
                             " rel " + fmt(h.relative_gap));
    };
  }
  log(Level::kInfo, "solving d=" + std::to_string(grid.d) + " nt=" + std::to_string(grid.nt) +
                        " nx=" + std::to_string(grid.nx));
  const Solution s = solve_planning(model, grid, m0.values, m1.values, config);

  RunFiles run{gl.out};
  ensure_dir(run.dir);
  write_text(run.model(), model_to_json(model) + "\n");
  write_text(run.grid(), grid_to_json(grid) + "\n");
  write_text(run.config(), config_to_json(config) + "\n");
  write_field(run.m0(), to_field_file(Density{grid, s.m0}));
  write_field(run.m1(), to_field_file(Density{grid, s.m1}));
  write_field(run.dir / "m.field", to_field_file(s.m, "density"));
  write_field(run.dir / "w.field", to_field_file(s.w));
  write_field(run.dir / "u.field", to_field_file(s.u));
  write_field(run.dir / "alpha.field", to_field_file(s.alpha, "scalar"));
  if (a.csv && grid.d == 1) {
    write_field_csv(run.dir / "m.csv", to_field_file(s.m, "density"));
    write_field_csv(run.dir / "u.csv", to_field_file(s.u));
    write_field_csv(run.dir / "alpha.csv", to_field_file(s.alpha, "scalar"));
    write_field_csv(run.dir / "w.csv", to_field_file(s.w));
  }
  write_history_csv(run.dir / "history.csv", s.history);
  write_json(run.solution(), {{"iterations", s.iterations},
                              {"converged", s.converged},
                              {"restoration_blend", s.restoration_blend},
                              {"operator_norm", s.operator_norm},
                              {"tau", s.tau},
                              {"sigma", s.sigma},
                              {"delta", s.delta},
                              {"seconds", s.seconds}});
  // The report is recomputed from the files just written so that diagnose
  // reproduces it exactly.
  ModelSpec reread;
  const Solution loaded = load_solution(run, reread);
  const json report = full_report(gl, reread, loaded);
  write_json(run.dir / "report.json", report);
  const std::string cfg = read_text(run.model()) + read_text(run.grid()) + read_text(run.config());
  write_json(run.dir / "manifest.json",
             manifest(gl, "solve",
                      {{"model", file_entry(a.model)}, {"grid", file_entry(a.grid)},
                       {"m0", field_entry(a.m0)}, {"m1", field_entry(a.m1)},
                       {"config", a.config.empty() ? json(nullptr) : file_entry(a.config)}},
                      {{"power_iteration", 20240601}}, cfg));
  log(Level::kInfo, "iterations " + std::to_string(s.iterations) + " B " + fmt(report["B"].get<double>()) +
                        " relative gap " + fmt(report["relative_gap"].get<double>()));
  std::cout << report["certificates"].dump() << "\n";
  return 0;
}

int run_diagnose(const Globals& gl, const std::string& dir) {
  RunFiles run{dir};
  ModelSpec model;
  const Solution s = load_solution(run, model);
  const json report = full_report(gl, model, s);
  const fs::path out = gl.out == "." ? run.dir : fs::path(gl.out);
  ensure_dir(out);
  write_json(out / "report.json", report);
  std::cout << report["certificates"].dump() << "\n";
  if (!report["certificates"]["all_pass"].get<bool>()) {
    for (const auto& [name, c] : report["certificates"].items()) {
      if (c.is_object() && !c["pass"].get<bool>()) {
        log(Level::kWarn, "certificate '" + name + "' exceeds its limit: " +
                              fmt(c["value"].get<double>()) + " > " + fmt(c["limit"].get<double>()));
      }
    }
    return kExitCertificate;
  }
  return 0;
}

// ---------------------------------------------------------------- kl

struct KlArgs {
  std::string m0, m1, config;
  double p = 2.0;
  std::vector<double> a{0.5, 1.0, 2.0};
  bool refine = false;
  int refine_steps = 8;
};

int run_kl(const Globals& gl, const KlArgs& a) {
  Density m0 = density_from(read_field(a.m0)), m1 = density_from(read_field(a.m1));
  require(m0.grid == m1.grid, ErrorCode::kShapeMismatch, "m0 and m1 live on different grids");
  SolverConfig config;
  if (!a.config.empty()) config = config_from_json(read_text(a.config));
  const KlDistance dist = kl_distance(m0, m1, a.a, a.p, config, a.refine, a.refine_steps);
  json costs = json::array();
  for (const KlCost& c : dist.evaluations) {
    costs.push_back({{"a", c.a},
                     {"cost", c.cost},
                     {"upper_bound", kl_upper_bound(m0, m1, c.a, a.p)},
                     {"relative_gap", c.relative_gap},
                     {"iterations", c.iterations},
                     {"converged", c.converged}});
  }
  json out = {{"p", a.p}, {"costs", costs}, {"d_KL", dist.value}, {"argmin_a", dist.argmin_a},
              {"refined", a.refine}};
  out["W2"] = m0.grid.d == 1 ? json(w2_1d(m0, m1)) : json(nullptr);
  const fs::path dir = gl.out;
  ensure_dir(dir);
  write_json(dir / "kl.json", out);
  write_json(dir / "kl.manifest.json",
             manifest(gl, "kl", {{"m0", field_entry(a.m0)}, {"m1", field_entry(a.m1)}},
                      {{"power_iteration", 20240601}}, config_to_json(config) + out["p"].dump()));
  std::cout << out.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------- trace

struct TraceArgs {
  std::string run;
  std::size_t n = 10000;
  std::uint64_t seed = 7;
  int steps = 0;
  int record_every = 4;
  int bumps = 20;
  int bins = 16;
  std::string out;
};

int run_trace(const Globals& gl, const TraceArgs& a) {
  RunFiles run{a.run};
  ModelSpec model;
  const Solution s = load_solution(run, model);
  const GridSpec& g = s.grid;
  const int steps = a.steps > 0 ? a.steps : 4 * g.nt;
  require(a.record_every >= 1, ErrorCode::kInvalidArgument, "--record-every must be >= 1");
  if (!positivity_convention(model)) {
    log(Level::kWarn, "model has negative V_H or V_f; path costs may be negative");
  }
  const FlowInterpolator flow(model, s);
  const auto starts = sample_particles(Density{g, s.m0}, a.n, a.seed);
  // Full-resolution paths for the checks; the CSV is thinned by --record-every.
  const auto paths = trace_ensemble(flow, starts, steps, 1);
  const SuperpositionReport sup = verify_superposition(flow, s, paths);
  const OptimalityReport opt = path_optimality_check(flow, s, paths, a.bumps, a.seed);
  const TransportPlanSummary plan = transport_plan_summary(g, paths, a.bins);

  fs::path csv = a.out.empty() ? fs::path(gl.out) / "paths.csv" : fs::path(a.out);
  if (csv.has_parent_path()) ensure_dir(csv.parent_path());
  {
    std::ofstream out(csv, std::ios::trunc);
    require(out.good(), ErrorCode::kIo, "cannot write '" + csv.string() + "'");
    out << std::setprecision(17) << "id,t,x" << (g.d == 2 ? ",y" : "") << ",cost_so_far\n";
    for (std::size_t i = 0; i < paths.size(); ++i) {
      const Trajectory& p = paths[i];
      for (std::size_t j = 0; j < p.times.size(); ++j) {
        if (j % a.record_every != 0 && j + 1 != p.times.size()) continue;
        out << i << ',' << p.times[j] << ',' << p.positions[j][0];
        if (g.d == 2) out << ',' << p.positions[j][1];
        out << ',' << p.cost_so_far[j] << '\n';
      }
    }
  }
  const fs::path dir = csv.has_parent_path() ? csv.parent_path() : fs::path(".");
  std::size_t flagged = 0, clamped = 0;
  for (const Trajectory& p : paths) {
    flagged += p.low_confidence;
    clamped += p.clamped;
  }
  json summary = {{"particles", paths.size()},
                  {"steps", steps},
                  {"seed", a.seed},
                  {"low_confidence", flagged},
                  {"clamped", clamped},
                  {"superposition", json::parse(superposition_to_json(sup))},
                  {"optimality", json::parse(optimality_to_json(opt))},
                  {"transport_plan",
                   {{"bins", plan.bins},
                    {"mean_displacement", plan.mean_displacement},
                    {"diagonal_spread", plan.diagonal_spread},
                    {"marginal0", plan.marginal0},
                    {"marginal1", plan.marginal1},
                    {"joint", plan.joint}}}};
  write_json(dir / "summary.json", summary);
  write_json(dir / "trace.manifest.json",
             manifest(gl, "trace", {{"run", a.run}, {"m", field_entry(run.dir / "m.field")}},
                      {{"particles", a.seed}}, summary["steps"].dump() + std::to_string(a.n)));
  log(Level::kInfo, "traced " + std::to_string(paths.size()) + " particles, endpoint discrepancy " +
                        fmt(sup.discrepancy.back()) + " (tolerance " + fmt(sup.tolerance) + ")");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Globals gl;
  gl.argv.assign(argv, argv + argc);
  CLI::App app{"Mean-field planning solver"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--threads", gl.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", gl.out, "Output directory");
  app.add_option("--log-level", gl.log_level, "error|warn|info|debug");
  app.add_option("--tol-gap", gl.tol_gap, "Relative duality gap limit");
  app.add_option("--tol-residual", gl.tol_residual, "Continuity/mass/identity limit");
  app.add_option("--tol-hj", gl.tol_hj, "Certificate limit relative to max(1,|B|)");

  GenArgs ga;
  auto* gen = app.add_subcommand("gen", "Generate an endpoint density");
  gen->add_option("--kind", ga.kind, "gaussian|box|bimodal|ring")->required();
  gen->add_option("--grid", ga.grid, "Grid JSON (overrides --d/--nx/--R)");
  gen->add_option("--d", ga.d, "Spatial dimension (1 or 2)");
  gen->add_option("--nx", ga.nx, "Cells per axis");
  gen->add_option("--nt", ga.nt, "Time cells recorded in the grid");
  gen->add_option("--R", ga.R, "Half-width of the box [-R, R]^d");
  gen->add_option("--center", ga.center, "Centre (gaussian, bimodal first mode)")->delimiter(',');
  gen->add_option("--center2", ga.center2, "Second mode centre (bimodal)")->delimiter(',');
  gen->add_option("--lo", ga.lo, "Lower corner (box)")->delimiter(',');
  gen->add_option("--hi", ga.hi, "Upper corner (box)")->delimiter(',');
  gen->add_option("--sigma", ga.sigma, "Standard deviation");
  gen->add_option("--weight", ga.weight, "Mass of the first mode (bimodal)");
  gen->add_option("--radius", ga.radius, "Ring radius (d = 2)");
  gen->add_option("--width", ga.width, "Ring width (d = 2)");
  gen->add_option("--noise", ga.noise, "Multiplicative jitter amplitude");
  gen->add_option("--seed", ga.seed, "Seed for --noise");
  gen->add_option("--name", ga.name, "Output file stem");
  gen->add_flag("--csv", ga.csv, "Also export CSV (d = 1)");

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "Solve a planning problem");
  solve->add_option("--model", sa.model, "Model JSON")->required();
  solve->add_option("--grid", sa.grid, "Grid JSON")->required();
  solve->add_option("--m0", sa.m0, "Initial density field")->required();
  solve->add_option("--m1", sa.m1, "Final density field")->required();
  solve->add_option("--config", sa.config, "Solver configuration JSON");
  solve->add_flag("--csv", sa.csv, "Also export CSV (d = 1)");

  KlArgs ka;
  auto* kl = app.add_subcommand("kl", "Kantorovich-Lebesgue costs");
  kl->add_option("--m0", ka.m0, "Initial density field")->required();
  kl->add_option("--m1", ka.m1, "Final density field")->required();
  kl->add_option("--p", ka.p, "Coupling exponent");
  kl->add_option("--a", ka.a, "Comma-separated scale grid")->delimiter(',');
  kl->add_option("--config", ka.config, "Solver configuration JSON");
  kl->add_flag("--refine", ka.refine, "Golden-section refinement in log a");
  kl->add_option("--refine-steps", ka.refine_steps, "Refinement evaluations");

  std::string diag_run;
  auto* diagnose = app.add_subcommand("diagnose", "Recompute certificates of a run");
  diagnose->add_option("--run", diag_run, "Run directory written by solve")->required();

  TraceArgs ta;
  auto* trace = app.add_subcommand("trace", "Trace characteristics of a run");
  trace->add_option("--run", ta.run, "Run directory written by solve")->required();
  trace->add_option("--n", ta.n, "Particles sampled from m0");
  trace->add_option("--seed", ta.seed, "Sampling and perturbation seed");
  trace->add_option("--steps", ta.steps, "RK4 steps (default 4 nt)");
  trace->add_option("--record-every", ta.record_every, "CSV thinning stride");
  trace->add_option("--bumps", ta.bumps, "Perturbations per path");
  trace->add_option("--bins", ta.bins, "Bins per axis of the plan histogram");
  trace->add_option("--out", ta.out, "paths.csv location (default <out>/paths.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_error("invalid_argument", e.what());
    return kExitError;
  }

  try {
    g_level = level_of(gl.log_level);
    set_thread_count(gl.threads);
    if (*gen) return run_gen(gl, ga);
    if (*solve) return run_solve(gl, sa);
    if (*kl) return run_kl(gl, ka);
    if (*diagnose) return run_diagnose(gl, diag_run);
    if (*trace) return run_trace(gl, ta);
  } catch (const Error& e) {
    emit_error(to_string(e.code()), e.what());
    return kExitError;
  } catch (const std::exception& e) {
    emit_error("internal", e.what());
    return kExitError;
  }
  return kExitError;
}
