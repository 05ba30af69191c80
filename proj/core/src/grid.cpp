#include "mfplan/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mfplan/error.hpp"

namespace mfplan {

void GridSpec::validate() const {
  require(d == 1 || d == 2, ErrorCode::kUnsupported, "grid: d must be 1 or 2");
  require(nt >= 2, ErrorCode::kInvalidArgument, "grid: nt must be >= 2");
  require(nx >= 4, ErrorCode::kInvalidArgument, "grid: nx must be >= 4");
  require(R > 0.0 && std::isfinite(R), ErrorCode::kInvalidArgument, "grid: R must be > 0");
}

double GridSpec::cell_volume() const { return d == 1 ? dx() : dx() * dx(); }

std::size_t GridSpec::cells() const {
  const auto n = static_cast<std::size_t>(nx);
  return d == 1 ? n : n * n;
}

std::array<int, 2> GridSpec::cell_index(std::size_t flat) const {
  if (d == 1) return {static_cast<int>(flat), 0};
  return {static_cast<int>(flat / nx), static_cast<int>(flat % nx)};
}

std::size_t GridSpec::flat_cell(const std::array<int, 2>& idx) const {
  if (d == 1) return static_cast<std::size_t>(idx[0]);
  return static_cast<std::size_t>(idx[0]) * nx + idx[1];
}

std::array<double, 2> GridSpec::cell_center(std::size_t flat) const {
  const auto idx = cell_index(flat);
  if (d == 1) return {center(idx[0]), 0.0};
  return {center(idx[0]), center(idx[1])};
}

std::array<double, 2> GridSpec::face_center(int axis, std::size_t flat) const {
  if (d == 1) return {face_coord(static_cast<int>(flat)), 0.0};
  if (axis == 0) {
    return {face_coord(static_cast<int>(flat / nx)), center(static_cast<int>(flat % nx))};
  }
  const auto stride = static_cast<std::size_t>(nx) + 1;
  return {center(static_cast<int>(flat / stride)), face_coord(static_cast<int>(flat % stride))};
}

AxisLines::AxisLines(const GridSpec& grid, int axis)
    : d_(grid.d), nx_(grid.nx), axis_(axis), count_(grid.lines()) {
  if (d_ == 1) {
    cell_stride_ = 1;
    face_stride_ = 1;
  } else if (axis_ == 0) {
    cell_stride_ = static_cast<std::size_t>(nx_);
    face_stride_ = static_cast<std::size_t>(nx_);
  } else {
    cell_stride_ = 1;
    face_stride_ = 1;
  }
}

std::size_t AxisLines::cell_base(std::size_t line) const {
  if (d_ == 1) return 0;
  return axis_ == 0 ? line : line * nx_;
}

std::size_t AxisLines::face_base(std::size_t line) const {
  if (d_ == 1) return 0;
  return axis_ == 0 ? line : line * (nx_ + 1);
}

SliceField::SliceField(const GridSpec& grid, double value)
    : grid_(grid), cells_(grid.cells()), values_((grid.nt + 1) * grid.cells(), value) {}

CellField::CellField(const GridSpec& grid, double value)
    : grid_(grid), cells_(grid.cells()), values_(grid.nt * grid.cells(), value) {}

MomentumField::MomentumField(const GridSpec& grid, double value) : grid_(grid) {
  for (int a = 0; a < grid.d; ++a) comp_[a].assign(grid.nt * grid.faces(a), value);
  enforce_no_flux();
}

void MomentumField::enforce_no_flux() {
  for (int a = 0; a < grid_.d; ++a) {
    const AxisLines lines(grid_, a);
    for (int k = 0; k < grid_.nt; ++k) {
      auto w = step(a, k);
      for (std::size_t l = 0; l < lines.count(); ++l) {
        const std::size_t base = lines.face_base(l);
        w[base] = 0.0;
        w[base + grid_.nx * lines.face_stride()] = 0.0;
      }
    }
  }
}

double Density::mass() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * grid.cell_volume();
}

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what) {
  if (!(a == b)) {
    std::ostringstream os;
    os << what << ": grid mismatch (d=" << a.d << ",nt=" << a.nt << ",nx=" << a.nx
       << ",R=" << a.R << " vs d=" << b.d << ",nt=" << b.nt << ",nx=" << b.nx << ",R=" << b.R
       << ")";
    fail(ErrorCode::kShapeMismatch, os.str());
  }
}

namespace {

void check_sizes(const DensityField& m, const MomentumField& w) {
  require_same_grid(m.grid(), w.grid(), "continuity");
  const GridSpec& g = m.grid();
  require(m.values().size() == (g.nt + 1) * g.cells(), ErrorCode::kShapeMismatch,
          "density field has wrong size");
  for (int a = 0; a < g.d; ++a) {
    require(w.component(a).size() == g.nt * g.faces(a), ErrorCode::kShapeMismatch,
            "momentum field has wrong size");
  }
}

// out_k += div w_k for one time cell.
void add_divergence(const GridSpec& g, const MomentumField& w, int k, std::span<double> out,
                    bool interior_only) {
  const double inv_dx = 1.0 / g.dx();
  for (int a = 0; a < g.d; ++a) {
    const AxisLines lines(g, a);
    const auto wk = w.step(a, k);
    for (std::size_t l = 0; l < lines.count(); ++l) {
      const std::size_t cb = lines.cell_base(l), fb = lines.face_base(l);
      for (int j = 0; j < g.nx; ++j) {
        double lo = wk[fb + j * lines.face_stride()];
        double hi = wk[fb + (j + 1) * lines.face_stride()];
        if (interior_only) {
          if (j == 0) lo = 0.0;
          if (j + 1 == g.nx) hi = 0.0;
        }
        out[cb + j * lines.cell_stride()] += (hi - lo) * inv_dx;
      }
    }
  }
}

}  // namespace

CellField continuity_residual(const DensityField& m, const MomentumField& w) {
  check_sizes(m, w);
  const GridSpec& g = m.grid();
  CellField r(g);
  const double inv_dt = 1.0 / g.dt();
  for (int k = 0; k < g.nt; ++k) {
    auto rk = r.slice(k);
    const auto lo = m.slice(k), hi = m.slice(k + 1);
    for (std::size_t c = 0; c < g.cells(); ++c) rk[c] = (hi[c] - lo[c]) * inv_dt;
    add_divergence(g, w, k, rk, false);
  }
  return r;
}

double max_abs(std::span<const double> values) {
  double r = 0.0;
  for (double v : values) r = std::max(r, std::abs(v));
  return r;
}

ContinuityProjector::ContinuityProjector(const GridSpec& grid)
    : grid_(grid),
      poisson_(grid.d == 1 ? std::vector<int>{grid.nt, grid.nx}
                           : std::vector<int>{grid.nt, grid.nx, grid.nx},
               grid.d == 1 ? std::vector<double>{grid.dt(), grid.dx()}
                           : std::vector<double>{grid.dt(), grid.dx(), grid.dx()}) {
  grid_.validate();
}

CellField ContinuityProjector::apply(const DensityField& m, const MomentumField& w) const {
  check_sizes(m, w);
  const GridSpec& g = grid_;
  CellField r(g);
  const double inv_dt = 1.0 / g.dt();
  for (int k = 0; k < g.nt; ++k) {
    auto rk = r.slice(k);
    for (std::size_t c = 0; c < g.cells(); ++c) {
      const double hi = k + 1 < g.nt ? m.at(k + 1, c) : 0.0;
      const double lo = k > 0 ? m.at(k, c) : 0.0;
      rk[c] = (hi - lo) * inv_dt;
    }
    add_divergence(g, w, k, rk, true);
  }
  return r;
}

void ContinuityProjector::apply_transpose(const CellField& phi, DensityField& m,
                                          MomentumField& w) const {
  const GridSpec& g = grid_;
  const double inv_dt = 1.0 / g.dt(), inv_dx = 1.0 / g.dx();
  m = DensityField(g);
  w = MomentumField(g);
  for (int k = 1; k < g.nt; ++k) {
    for (std::size_t c = 0; c < g.cells(); ++c) {
      m.at(k, c) = (phi.at(k - 1, c) - phi.at(k, c)) * inv_dt;
    }
  }
  for (int a = 0; a < g.d; ++a) {
    const AxisLines lines(g, a);
    for (int k = 0; k < g.nt; ++k) {
      auto wk = w.step(a, k);
      const auto pk = phi.slice(k);
      for (std::size_t l = 0; l < lines.count(); ++l) {
        const std::size_t cb = lines.cell_base(l), fb = lines.face_base(l);
        for (int f = 1; f < g.nx; ++f) {
          wk[fb + f * lines.face_stride()] =
              (pk[cb + (f - 1) * lines.cell_stride()] - pk[cb + f * lines.cell_stride()]) *
              inv_dx;
        }
      }
    }
  }
}

void ContinuityProjector::solve_normal(CellField& rhs) const {
  require_same_grid(rhs.grid(), grid_, "solve_normal");
  poisson_.solve(rhs.values());
}

void ContinuityProjector::project(DensityField& m, MomentumField& w, std::span<const double> m0,
                                  std::span<const double> m1) const {
  check_sizes(m, w);
  require_same_grid(m.grid(), grid_, "project_continuity");
  const GridSpec& g = grid_;
  require(m0.size() == g.cells() && m1.size() == g.cells(), ErrorCode::kShapeMismatch,
          "project_continuity: endpoint size");
  double mass0 = 0.0, mass1 = 0.0;
  for (std::size_t c = 0; c < g.cells(); ++c) {
    require(m0[c] >= 0.0 && m1[c] >= 0.0, ErrorCode::kDomain,
            "project_continuity: endpoint densities must be nonnegative");
    mass0 += m0[c];
    mass1 += m1[c];
  }
  mass0 *= g.cell_volume();
  mass1 *= g.cell_volume();
  if (std::abs(mass0 - mass1) > 1e-12 * std::max(1.0, std::max(mass0, mass1))) {
    std::ostringstream os;
    os.precision(17);
    os << "project_continuity: endpoint masses differ (" << mass0 << " vs " << mass1 << ")";
    fail(ErrorCode::kInfeasibleEndpoints, os.str());
  }

  std::copy(m0.begin(), m0.end(), m.slice(0).begin());
  std::copy(m1.begin(), m1.end(), m.slice(g.nt).begin());
  w.enforce_no_flux();

  CellField phi = continuity_residual(m, w);
  solve_normal(phi);
  DensityField dm;
  MomentumField dw;
  apply_transpose(phi, dm, dw);
  auto& mv = m.values();
  const auto& dmv = dm.values();
  for (std::size_t i = 0; i < mv.size(); ++i) mv[i] -= dmv[i];
  for (int a = 0; a < g.d; ++a) {
    auto& wv = w.component(a);
    const auto& dwv = dw.component(a);
    for (std::size_t i = 0; i < wv.size(); ++i) wv[i] -= dwv[i];
  }
}

ProjectionResult project_continuity(const DensityField& m, const MomentumField& w,
                                    std::span<const double> m0, std::span<const double> m1) {
  ContinuityProjector projector(m.grid());
  ProjectionResult out{m, w};
  projector.project(out.m, out.w, m0, m1);
  return out;
}

MomentumField momentum_for(const DensityField& m) {
  const GridSpec& g = m.grid();
  g.validate();
  NeumannPoisson spatial(g.d == 1 ? std::vector<int>{g.nx} : std::vector<int>{g.nx, g.nx},
                         g.d == 1 ? std::vector<double>{g.dx()}
                                  : std::vector<double>{g.dx(), g.dx()});
  MomentumField w(g);
  const double inv_dt = 1.0 / g.dt(), inv_dx = 1.0 / g.dx();
  std::vector<double> lambda(g.cells());
  for (int k = 0; k < g.nt; ++k) {
    double scale = 0.0;
    for (std::size_t c = 0; c < g.cells(); ++c) {
      lambda[c] = -(m.at(k + 1, c) - m.at(k, c)) * inv_dt;
      scale = std::max(scale, std::abs(m.at(k + 1, c)) + std::abs(m.at(k, c)));
    }
    const double mean = spatial.solve(lambda);
    require(std::abs(mean) <= 1e-10 * std::max(1.0, scale * inv_dt), ErrorCode::kInfeasibleEndpoints,
            "momentum_for: consecutive slices carry different mass");
    for (int a = 0; a < g.d; ++a) {
      const AxisLines lines(g, a);
      auto wk = w.step(a, k);
      for (std::size_t l = 0; l < lines.count(); ++l) {
        const std::size_t cb = lines.cell_base(l), fb = lines.face_base(l);
        for (int f = 1; f < g.nx; ++f) {
          wk[fb + f * lines.face_stride()] = (lambda[cb + (f - 1) * lines.cell_stride()] -
                                              lambda[cb + f * lines.cell_stride()]) *
                                             inv_dx;
        }
      }
    }
  }
  return w;
}

std::vector<std::vector<double>> interp_face_to_center(const MomentumField& w) {
  const GridSpec& g = w.grid();
  std::vector<std::vector<double>> out(g.d, std::vector<double>(g.nt * g.cells(), 0.0));
  for (int a = 0; a < g.d; ++a) {
    const AxisLines lines(g, a);
    for (int k = 0; k < g.nt; ++k) {
      const auto wk = w.step(a, k);
      double* ck = out[a].data() + k * g.cells();
      for (std::size_t l = 0; l < lines.count(); ++l) {
        const std::size_t cb = lines.cell_base(l), fb = lines.face_base(l);
        for (int j = 0; j < g.nx; ++j) {
          ck[cb + j * lines.cell_stride()] =
              0.5 * (wk[fb + j * lines.face_stride()] + wk[fb + (j + 1) * lines.face_stride()]);
        }
      }
    }
  }
  return out;
}

MomentumField interp_center_to_face(const GridSpec& g,
                                    const std::vector<std::vector<double>>& centered) {
  require(static_cast<int>(centered.size()) == g.d, ErrorCode::kShapeMismatch,
          "interp_center_to_face: component count");
  MomentumField w(g);
  for (int a = 0; a < g.d; ++a) {
    require(centered[a].size() == g.nt * g.cells(), ErrorCode::kShapeMismatch,
            "interp_center_to_face: component size");
    const AxisLines lines(g, a);
    for (int k = 0; k < g.nt; ++k) {
      auto wk = w.step(a, k);
      const double* ck = centered[a].data() + k * g.cells();
      for (std::size_t l = 0; l < lines.count(); ++l) {
        const std::size_t cb = lines.cell_base(l), fb = lines.face_base(l);
        for (int f = 1; f < g.nx; ++f) {
          wk[fb + f * lines.face_stride()] =
              0.5 * (ck[cb + (f - 1) * lines.cell_stride()] + ck[cb + f * lines.cell_stride()]);
        }
      }
    }
  }
  return w;
}

std::vector<double> kappa_weights(const GridSpec& grid) {
  std::vector<double> kappa(grid.cells());
  for (std::size_t c = 0; c < grid.cells(); ++c) {
    const auto x = grid.cell_center(c);
    kappa[c] = 1.0 + x[0] * x[0] + x[1] * x[1];
  }
  return kappa;
}

SliceNorms slice_norms(const GridSpec& grid, std::span<const double> m, double p) {
  require(m.size() == grid.cells(), ErrorCode::kShapeMismatch, "slice_norms: size");
  SliceNorms out;
  const double vol = grid.cell_volume();
  double lp_sum = 0.0;
  for (std::size_t c = 0; c < grid.cells(); ++c) {
    const auto x = grid.cell_center(c);
    const double r2 = x[0] * x[0] + x[1] * x[1];
    const double v = m[c];
    out.mass += v;
    out.quadratic_moment += r2 * v;
    lp_sum += std::pow(std::abs(v), p);
    const auto idx = grid.cell_index(c);
    bool edge = idx[0] == 0 || idx[0] == grid.nx - 1;
    if (grid.d == 2) edge = edge || idx[1] == 0 || idx[1] == grid.nx - 1;
    if (edge) out.boundary_mass += v;
  }
  out.mass *= vol;
  out.quadratic_moment *= vol;
  out.boundary_mass *= vol;
  out.l1_kappa = out.mass + out.quadratic_moment;
  out.lp = std::pow(lp_sum * vol, 1.0 / p);
  return out;
}

WeightedNorms weighted_norms(const DensityField& m, double p) {
  const GridSpec& g = m.grid();
  WeightedNorms out;
  double lp_sum = 0.0;
  for (int k = 0; k <= g.nt; ++k) {
    const SliceNorms s = slice_norms(g, m.slice(k), p);
    const double weight = (k == 0 || k == g.nt ? 0.5 : 1.0) * g.dt();
    out.l1_kappa += weight * s.l1_kappa;
    out.quadratic_moment += weight * s.quadratic_moment;
    lp_sum += weight * std::pow(s.lp, p);
    out.per_slice.push_back(s);
  }
  out.lp = std::pow(lp_sum, 1.0 / p);
  return out;
}

}  // namespace mfplan
