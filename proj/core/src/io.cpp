#include "mfplan/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mfplan/error.hpp"

namespace mfplan {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::uint64_t swap_bytes(std::uint64_t u) {
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r = (r << 8) | ((u >> (8 * i)) & 0xffU);
  return r;
}

fs::path sidecar(const fs::path& p) { return fs::path(p.string() + ".json"); }

json parse(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kIo, std::string(what) + ": " + e.what());
  }
}

void check_keys(const json& j, const std::set<std::string>& allowed, const char* what) {
  require(j.is_object(), ErrorCode::kIo, std::string(what) + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    require(allowed.count(k) > 0, ErrorCode::kIo, std::string(what) + ": unknown key '" + k + "'");
  }
}

double number(const json& j, const char* key) {
  require(j.is_number(), ErrorCode::kIo, std::string("expected a number for '") + key + "'");
  return j.get<double>();
}

json grid_json(const GridSpec& g) {
  return {{"d", g.d}, {"nt", g.nt}, {"nx", g.nx}, {"R", g.R}};
}

GridSpec grid_of(const json& j) {
  GridSpec g;
  try {
    g.d = j.at("d").get<int>();
    g.nt = j.at("nt").get<int>();
    g.nx = j.at("nx").get<int>();
    g.R = j.at("R").get<double>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kIo, std::string("grid: ") + e.what());
  }
  g.validate();
  return g;
}

std::size_t expected_count(const std::string& layout, const GridSpec& g, int components) {
  if (layout == "spatial") return g.cells();
  if (layout == "slices") return (g.nt + 1) * g.cells();
  if (layout == "cells") return g.nt * g.cells();
  if (layout == "faces") {
    std::size_t n = 0;
    for (int a = 0; a < components; ++a) n += g.nt * g.faces(a);
    return n;
  }
  fail(ErrorCode::kIo, "unknown field layout '" + layout + "'");
}

SpatialFunction coefficient(const json& j, const char* key, const fs::path& base) {
  if (j.is_number()) return j.get<double>();
  require(j.is_object(), ErrorCode::kIo, std::string("model: bad value for '") + key + "'");
  if (j.contains("field")) {
    fs::path p = j.at("field").get<std::string>();
    if (p.is_relative()) p = base / p;
    const FieldFile f = read_field(p);
    require(f.layout == "spatial", ErrorCode::kIo,
            std::string("model: field for '") + key + "' must be a single slice");
    return SpatialFunction::sampled(f.grid, f.data);
  }
  require(j.contains("grid") && j.contains("values"), ErrorCode::kIo,
          std::string("model: '") + key + "' needs a number, {field} or {grid, values}");
  return SpatialFunction::sampled(grid_of(j.at("grid")), j.at("values").get<std::vector<double>>());
}

json coefficient_json(const SpatialFunction& f) {
  if (f.is_constant()) return f.constant();
  return {{"grid", grid_json(f.grid())}, {"values", f.samples()}};
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorCode::kIo, "cannot write '" + path.string() + "'");
  out << text;
  require(out.good(), ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

void write_field(const fs::path& path, const FieldFile& f) {
  f.grid.validate();
  require(f.data.size() == expected_count(f.layout, f.grid, f.components), ErrorCode::kShapeMismatch,
          "write_field: payload size does not match layout");
  std::string bytes(f.data.size() * sizeof(double), '\0');
  for (std::size_t i = 0; i < f.data.size(); ++i) {
    std::uint64_t u = std::bit_cast<std::uint64_t>(f.data[i]);
    if constexpr (std::endian::native == std::endian::big) u = swap_bytes(u);
    std::memcpy(bytes.data() + i * sizeof(double), &u, sizeof(u));
  }
  write_text(path, bytes);
  json hdr = grid_json(f.grid);
  hdr["kind"] = f.kind;
  hdr["layout"] = f.layout;
  hdr["components"] = f.components;
  hdr["count"] = f.data.size();
  write_text(sidecar(path), hdr.dump(2) + "\n");
}

FieldFile read_field(const fs::path& path) {
  const json hdr = parse(read_text(sidecar(path)), "field header");
  FieldFile f;
  try {
    f.kind = hdr.at("kind").get<std::string>();
    f.layout = hdr.value("layout", std::string(f.kind == "momentum" ? "faces" : "spatial"));
    f.components = hdr.value("components", 1);
  } catch (const json::exception& e) {
    fail(ErrorCode::kIo, std::string("field header: ") + e.what());
  }
  require(f.kind == "density" || f.kind == "momentum" || f.kind == "scalar", ErrorCode::kIo,
          "field header: unknown kind '" + f.kind + "'");
  f.grid = grid_of(hdr);
  const std::string bytes = read_text(path);
  const std::size_t n = expected_count(f.layout, f.grid, f.components);
  require(bytes.size() == n * sizeof(double), ErrorCode::kIo,
          "field '" + path.string() + "': payload size does not match header");
  f.data.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t u;
    std::memcpy(&u, bytes.data() + i * sizeof(double), sizeof(u));
    if constexpr (std::endian::native == std::endian::big) u = swap_bytes(u);
    f.data[i] = std::bit_cast<double>(u);
  }
  return f;
}

FieldFile to_field_file(const Density& m) { return {"density", "spatial", m.grid, 1, m.values}; }
FieldFile to_field_file(const SliceField& s, const std::string& kind) {
  return {kind, "slices", s.grid(), 1, s.values()};
}
FieldFile to_field_file(const CellField& c) { return {"scalar", "cells", c.grid(), 1, c.values()}; }
FieldFile to_field_file(const MomentumField& w) {
  FieldFile f{"momentum", "faces", w.grid(), w.dims(), {}};
  for (int a = 0; a < w.dims(); ++a) {
    f.data.insert(f.data.end(), w.component(a).begin(), w.component(a).end());
  }
  return f;
}

Density density_from(const FieldFile& f) {
  require(f.layout == "spatial", ErrorCode::kIo, "expected a single-slice density field");
  return {f.grid, f.data};
}

SliceField slices_from(const FieldFile& f) {
  require(f.layout == "slices", ErrorCode::kIo, "expected a slice field");
  SliceField s(f.grid);
  s.values() = f.data;
  return s;
}

CellField cells_from(const FieldFile& f) {
  require(f.layout == "cells", ErrorCode::kIo, "expected a time-cell field");
  CellField c(f.grid);
  c.values() = f.data;
  return c;
}

MomentumField momentum_from(const FieldFile& f) {
  require(f.layout == "faces" && f.components == f.grid.d, ErrorCode::kIo,
          "expected a momentum field");
  MomentumField w(f.grid);
  std::size_t off = 0;
  for (int a = 0; a < f.grid.d; ++a) {
    auto& c = w.component(a);
    std::copy(f.data.begin() + off, f.data.begin() + off + c.size(), c.begin());
    off += c.size();
  }
  return w;
}

void write_field_csv(const fs::path& path, const FieldFile& f) {
  require(f.grid.d == 1, ErrorCode::kUnsupported, "CSV export is only available for d = 1");
  const GridSpec& g = f.grid;
  std::ostringstream out;
  out << std::setprecision(17);
  const int nx = g.nx;
  if (f.layout == "spatial") {
    out << "x,value\n";
    for (int j = 0; j < nx; ++j) out << g.center(j) << ',' << f.data[j] << '\n';
  } else {
    out << "t,x,value\n";
    const bool faces = f.layout == "faces";
    const int per = faces ? nx + 1 : nx;
    const std::size_t rows = f.data.size() / per;
    for (std::size_t k = 0; k < rows; ++k) {
      const double t = f.layout == "slices" ? k * g.dt() : (k + 0.5) * g.dt();
      for (int j = 0; j < per; ++j) {
        out << t << ',' << (faces ? g.face_coord(j) : g.center(j)) << ',' << f.data[k * per + j]
            << '\n';
      }
    }
  }
  write_text(path, out.str());
}

ModelSpec model_from_json(const std::string& text, const fs::path& base) {
  const json j = parse(text, "model");
  check_keys(j, {"p", "hamiltonian", "coupling", "constants"}, "model");
  ModelSpec m;
  require(j.contains("p"), ErrorCode::kIo, "model: missing 'p'");
  m.p = number(j.at("p"), "p");
  if (j.contains("hamiltonian")) {
    const json& h = j.at("hamiltonian");
    check_keys(h, {"g", "z", "V_H"}, "model.hamiltonian");
    if (h.contains("g")) m.g = coefficient(h.at("g"), "g", base);
    if (h.contains("V_H")) m.V_H = coefficient(h.at("V_H"), "V_H", base);
    if (h.contains("z")) {
      const json& z = h.at("z");
      if (z.is_array()) {
        require(z.size() <= 2, ErrorCode::kIo, "model: z has at most two components");
        for (std::size_t a = 0; a < z.size(); ++a) m.z[a] = coefficient(z[a], "z", base);
      } else {
        m.z[0] = coefficient(z, "z", base);
      }
    }
  }
  if (j.contains("coupling")) {
    const json& c = j.at("coupling");
    check_keys(c, {"a", "V_f"}, "model.coupling");
    if (c.contains("a")) m.a = coefficient(c.at("a"), "a", base);
    if (c.contains("V_f")) m.V_f = coefficient(c.at("V_f"), "V_f", base);
  }
  if (j.contains("constants")) {
    const json& c = j.at("constants");
    check_keys(c, {"c_H", "c_H_plus", "c_H_minus", "c_f"}, "model.constants");
    if (c.contains("c_H")) m.c_H = number(c.at("c_H"), "c_H");
    if (c.contains("c_H_plus")) m.c_H_plus = number(c.at("c_H_plus"), "c_H_plus");
    if (c.contains("c_H_minus")) m.c_H_minus = number(c.at("c_H_minus"), "c_H_minus");
    if (c.contains("c_f")) m.c_f = number(c.at("c_f"), "c_f");
  }
  m.validate();
  return m;
}

std::string model_to_json(const ModelSpec& m) {
  json j;
  j["p"] = m.p;
  j["hamiltonian"] = {{"g", coefficient_json(m.g)},
                      {"z", json::array({coefficient_json(m.z[0]), coefficient_json(m.z[1])})},
                      {"V_H", coefficient_json(m.V_H)}};
  j["coupling"] = {{"a", coefficient_json(m.a)}, {"V_f", coefficient_json(m.V_f)}};
  j["constants"] = {{"c_H", m.c_H}, {"c_H_plus", m.c_H_plus}, {"c_H_minus", m.c_H_minus},
                    {"c_f", m.c_f}};
  return j.dump(2);
}

GridSpec grid_from_json(const std::string& text) {
  const json j = parse(text, "grid");
  check_keys(j, {"d", "nt", "nx", "R"}, "grid");
  return grid_of(j);
}

std::string grid_to_json(const GridSpec& g) { return grid_json(g).dump(2); }

SolverConfig config_from_json(const std::string& text) {
  const json j = parse(text, "config");
  check_keys(j,
             {"max_iters", "tau_primal", "tau_dual", "step_ratio", "theta", "stop_gap",
              "stop_residual", "check_every", "init", "density_floor", "power_iterations",
              "reference_bump", "heat_time"},
             "config");
  SolverConfig c;
  try {
    c.max_iters = j.value("max_iters", c.max_iters);
    c.tau_primal = j.value("tau_primal", c.tau_primal);
    c.tau_dual = j.value("tau_dual", c.tau_dual);
    c.step_ratio = j.value("step_ratio", c.step_ratio);
    c.theta = j.value("theta", c.theta);
    c.stop_gap = j.value("stop_gap", c.stop_gap);
    c.stop_residual = j.value("stop_residual", c.stop_residual);
    c.check_every = j.value("check_every", c.check_every);
    if (j.contains("init")) c.init = parse_init_strategy(j.at("init").get<std::string>());
    c.density_floor = j.value("density_floor", c.density_floor);
    c.power_iterations = j.value("power_iterations", c.power_iterations);
    c.reference_bump = j.value("reference_bump", c.reference_bump);
    c.heat_time = j.value("heat_time", c.heat_time);
  } catch (const json::exception& e) {
    fail(ErrorCode::kIo, std::string("config: ") + e.what());
  }
  require(c.max_iters >= 1 && c.check_every >= 1, ErrorCode::kInvalidArgument,
          "config: max_iters and check_every must be >= 1");
  return c;
}

std::string config_to_json(const SolverConfig& c) {
  const json j = {{"max_iters", c.max_iters},       {"tau_primal", c.tau_primal},
                  {"tau_dual", c.tau_dual},         {"step_ratio", c.step_ratio},
                  {"theta", c.theta},               {"stop_gap", c.stop_gap},
                  {"stop_residual", c.stop_residual}, {"check_every", c.check_every},
                  {"init", to_string(c.init)},      {"density_floor", c.density_floor},
                  {"power_iterations", c.power_iterations},
                  {"reference_bump", c.reference_bump}, {"heat_time", c.heat_time}};
  return j.dump(2);
}

std::string report_to_json(const DiagnosticsReport& r) {
  json slices = json::array();
  for (const SliceNorms& s : r.per_slice) {
    slices.push_back({{"mass", s.mass}, {"l1_kappa", s.l1_kappa}, {"lp", s.lp},
                      {"quadratic_moment", s.quadratic_moment},
                      {"boundary_mass", s.boundary_mass}});
  }
  const json j = {{"B", finite_or_null(r.B)},
                  {"A", finite_or_null(r.A)},
                  {"gap", finite_or_null(r.gap)},
                  {"relative_gap", finite_or_null(r.relative_gap)},
                  {"yh_integral", finite_or_null(r.yh_integral)},
                  {"yf_integral", finite_or_null(r.yf_integral)},
                  {"defect_mass", finite_or_null(r.defect_mass)},
                  {"contact_defect", finite_or_null(r.contact_defect)},
                  {"constraint_pairing", finite_or_null(r.constraint_pairing)},
                  {"identity_error", finite_or_null(r.identity_error)},
                  {"hj_violation", finite_or_null(r.hj_violation)},
                  {"hj_violation_support", finite_or_null(r.hj_violation_support)},
                  {"yf_support", finite_or_null(r.yf_support)},
                  {"continuity_residual", finite_or_null(r.continuity_residual)},
                  {"mass_drift", finite_or_null(r.mass_drift)},
                  {"boundary_mass", finite_or_null(r.boundary_mass)},
                  {"min_alpha_slack", finite_or_null(r.min_alpha_slack)},
                  {"delta", r.delta},
                  {"restoration_blend", r.restoration_blend},
                  {"per_slice", slices}};
  return j.dump(2);
}

std::string apriori_to_json(const AprioriReport& r) {
  const json j = {{"kinetic", finite_or_null(r.kinetic)},
                  {"lp_integral", finite_or_null(r.lp_integral)},
                  {"energy_bound", finite_or_null(r.energy_bound)},
                  {"first_moment", finite_or_null(r.first_moment)},
                  {"momentum_norm", finite_or_null(r.momentum_norm)},
                  {"holder_rhs", finite_or_null(r.holder_rhs)},
                  {"root_moment", r.root_moment},
                  {"moment_bound", finite_or_null(r.moment_bound)},
                  {"finite", r.finite},
                  {"energy_ok", r.energy_ok},
                  {"holder_ok", r.holder_ok},
                  {"moment_ok", r.moment_ok}};
  return j.dump(2);
}

std::string superposition_to_json(const SuperpositionReport& r) {
  const json j = {{"times", r.times},
                  {"discrepancy", r.discrepancy},
                  {"baseline", r.baseline},
                  {"tolerance", r.tolerance},
                  {"mean_energy", r.mean_energy},
                  {"field_kinetic", r.field_kinetic},
                  {"particles", r.particles},
                  {"low_confidence", r.low_confidence},
                  {"clamped", r.clamped},
                  {"ok", r.ok}};
  return j.dump(2);
}

std::string optimality_to_json(const OptimalityReport& r) {
  const json j = {{"median_abs_residual", r.median_abs_residual},
                  {"p95_abs_residual", r.p95_abs_residual},
                  {"median_path_cost", r.median_path_cost},
                  {"mean_path_cost", r.mean_path_cost},
                  {"potential_difference", r.potential_difference},
                  {"perturbations", r.perturbations},
                  {"perturbation_wins", r.perturbation_wins},
                  {"worst_improvement", r.worst_improvement},
                  {"win_tolerance", r.win_tolerance},
                  {"excluded", r.excluded},
                  {"nonnegative_model", r.nonnegative_model},
                  {"negative_cost_seen", r.negative_cost_seen},
                  {"residual_ok", r.residual_ok},
                  {"minimality_ok", r.minimality_ok},
                  {"bridge_ok", r.bridge_ok}};
  return j.dump(2);
}

void write_history_csv(const fs::path& path, const std::vector<HistoryEntry>& history) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "iteration,B,A,gap,relative_gap,yh_integral,yf_integral,defect_mass,primal_change,"
         "dual_change,continuity_residual,restoration_blend,seconds\n";
  for (const HistoryEntry& h : history) {
    out << h.iteration << ',' << h.B << ',' << h.A << ',' << h.gap << ',' << h.relative_gap << ','
        << h.yh_integral << ',' << h.yf_integral << ',' << h.defect_mass << ',' << h.primal_change
        << ',' << h.dual_change << ',' << h.continuity_residual << ',' << h.restoration_blend << ','
        << h.seconds << '\n';
  }
  write_text(path, out.str());
}

std::vector<HistoryEntry> read_history_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  std::getline(in, line);
  std::vector<HistoryEntry> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> v;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) v.push_back(std::stod(cell));
    require(v.size() == 13, ErrorCode::kIo, "history.csv: expected 13 columns");
    HistoryEntry h;
    h.iteration = static_cast<int>(v[0]);
    h.B = v[1];
    h.A = v[2];
    h.gap = v[3];
    h.relative_gap = v[4];
    h.yh_integral = v[5];
    h.yf_integral = v[6];
    h.defect_mass = v[7];
    h.primal_change = v[8];
    h.dual_change = v[9];
    h.continuity_residual = v[10];
    h.restoration_blend = v[11];
    h.seconds = v[12];
    out.push_back(h);
  }
  return out;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

}  // namespace mfplan
