#include "mfplan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mfplan/dual.hpp"
#include "mfplan/error.hpp"

namespace mfplan {
namespace {

void require_1d(const Density& m, const char* what) {
  require(m.grid.d == 1, ErrorCode::kUnsupported, std::string(what) + ": only d = 1");
  require(m.values.size() == m.grid.cells(), ErrorCode::kShapeMismatch,
          std::string(what) + ": size");
}

// Cumulative level at every face, normalised so the last entry is exactly 1.
std::vector<double> cumulative_levels(const Density& m) {
  const int n = m.grid.nx;
  std::vector<double> s(n + 1, 0.0);
  for (int j = 0; j < n; ++j) {
    require(m.values[j] >= 0.0, ErrorCode::kDomain, "density must be nonnegative");
    s[j + 1] = s[j] + m.values[j];
  }
  require(s[n] > 0.0, ErrorCode::kDomain, "density has zero mass");
  const double tot = s[n];
  for (double& v : s) v /= tot;
  s[n] = 1.0;
  return s;
}

// Linear piece of a quantile function over [a, b] (within one positive-length interval).
struct Piece {
  double a, b;     // levels
  double xa, xb;   // Q(a), Q(b)
};

class QuantileWalker {
 public:
  QuantileWalker(const std::vector<double>& s, const GridSpec& g) : s_(s), g_(g) {}
  // Q(level) on the interval containing [a, b]; the caller walks levels upward.
  double eval(double level, double a) {
    while (i_ + 1 < s_.size() - 1 && !(s_[i_ + 1] > a && s_[i_ + 1] > s_[i_])) ++i_;
    const double lo = s_[i_], hi = s_[i_ + 1];
    const double frac = hi > lo ? std::clamp((level - lo) / (hi - lo), 0.0, 1.0) : 0.0;
    return g_.face_coord(static_cast<int>(i_)) + frac * g_.dx();
  }

 private:
  const std::vector<double>& s_;
  const GridSpec& g_;
  std::size_t i_ = 0;
};

std::vector<double> merged_levels(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Pieces of the two quantile functions on their common level partition.
std::vector<std::pair<Piece, Piece>> paired_pieces(const Density& m0, const Density& m1) {
  const std::vector<double> s0 = cumulative_levels(m0), s1 = cumulative_levels(m1);
  const std::vector<double> lv = merged_levels(s0, s1);
  QuantileWalker q0(s0, m0.grid), q1(s1, m1.grid);
  std::vector<std::pair<Piece, Piece>> out;
  for (std::size_t i = 0; i + 1 < lv.size(); ++i) {
    const double a = lv[i], b = lv[i + 1];
    if (!(b > a)) continue;
    const double mid = 0.5 * (a + b);
    Piece p0{a, b, q0.eval(a, mid), q0.eval(b, mid)};
    Piece p1{a, b, q1.eval(a, mid), q1.eval(b, mid)};
    out.emplace_back(p0, p1);
  }
  return out;
}

// Integral over [0, len] of |linear function| with end values u, v.
double abs_linear_integral(double u, double v, double len) {
  if (u * v >= 0.0) return 0.5 * len * (std::abs(u) + std::abs(v));
  const double r = std::abs(u) / (std::abs(u) + std::abs(v));
  return 0.5 * len * (r * std::abs(u) + (1.0 - r) * std::abs(v));
}

// One-dimensional heat kernel matrix (column j = image of cell j), columns sum to 1.
std::vector<double> heat_matrix(const GridSpec& g, double t) {
  const int n = g.nx;
  const double dx = g.dx(), L = 2.0 * g.R;
  const double scale = 2.0 * std::sqrt(t);
  const double reach = 40.0 * std::sqrt(t);
  const int images = std::max(2, static_cast<int>(std::ceil(reach / (2.0 * L))) + 1);
  std::vector<double> K(static_cast<std::size_t>(n) * n, 0.0);
  for (int j = 0; j < n; ++j) {
    const double y = g.center(j) + g.R;  // in [0, L]
    double col = 0.0;
    for (int i = 0; i < n; ++i) {
      const double lo = g.face_coord(i) + g.R, hi = lo + dx;
      double w = 0.0;
      for (int k = -images; k <= images; ++k) {
        for (const double src : {y + 2.0 * k * L, -y + 2.0 * k * L}) {
          if (lo - src > reach || src - hi > reach) continue;
          w += 0.5 * (std::erf((hi - src) / scale) - std::erf((lo - src) / scale));
        }
      }
      K[static_cast<std::size_t>(i) * n + j] = w;
      col += w;
    }
    require(col > 0.0, ErrorCode::kNumerical, "heat kernel column vanished");
    for (int i = 0; i < n; ++i) K[static_cast<std::size_t>(i) * n + j] /= col;
  }
  return K;
}

}  // namespace

double QuantileFunction::operator()(double level) const {
  require(!s.empty() && s.size() == x.size(), ErrorCode::kInvalidArgument, "empty quantile");
  level = std::clamp(level, 0.0, 1.0);
  // Right-continuous inverse of the CDF: last node with s <= level on a rising piece.
  const auto it = std::upper_bound(s.begin(), s.end(), level);
  if (it == s.end()) return x.back();
  const std::size_t hi = static_cast<std::size_t>(it - s.begin());
  if (hi == 0) return x.front();
  const std::size_t lo = hi - 1;
  const double frac = (level - s[lo]) / (s[hi] - s[lo]);
  return x[lo] + frac * (x[hi] - x[lo]);
}

QuantileFunction quantile_function(const Density& m) {
  require_1d(m, "quantile_function");
  QuantileFunction q;
  q.s = cumulative_levels(m);
  q.x.resize(q.s.size());
  for (std::size_t i = 0; i < q.x.size(); ++i) q.x[i] = m.grid.face_coord(static_cast<int>(i));
  return q;
}

double w2_1d(const Density& m0, const Density& m1) {
  require_1d(m0, "w2_1d");
  require_1d(m1, "w2_1d");
  double acc = 0.0;
  for (const auto& [p0, p1] : paired_pieces(m0, m1)) {
    const double u = p0.xa - p1.xa, v = p0.xb - p1.xb;
    acc += (p0.b - p0.a) * (u * u + u * v + v * v) / 3.0;
  }
  return std::sqrt(std::max(acc, 0.0));
}

double w1_1d(const Density& m0, const Density& m1) {
  require_1d(m0, "w1_1d");
  require_1d(m1, "w1_1d");
  double acc = 0.0;
  for (const auto& [p0, p1] : paired_pieces(m0, m1)) {
    acc += abs_linear_integral(p0.xa - p1.xa, p0.xb - p1.xb, p0.b - p0.a);
  }
  return acc;
}

double w1_1d_samples(std::span<const double> samples, const Density& m) {
  require_1d(m, "w1_1d_samples");
  require(!samples.empty(), ErrorCode::kInvalidArgument, "w1_1d_samples: no samples");
  std::vector<double> xs(samples.begin(), samples.end());
  std::sort(xs.begin(), xs.end());
  const std::vector<double> s = cumulative_levels(m);
  const std::size_t n = xs.size();
  std::vector<double> emp(n + 1);
  for (std::size_t i = 0; i <= n; ++i) emp[i] = static_cast<double>(i) / n;
  emp[n] = 1.0;
  const std::vector<double> lv = merged_levels(s, emp);
  QuantileWalker q(s, m.grid);
  double acc = 0.0;
  std::size_t e = 0;
  for (std::size_t i = 0; i + 1 < lv.size(); ++i) {
    const double a = lv[i], b = lv[i + 1];
    if (!(b > a)) continue;
    const double mid = 0.5 * (a + b);
    while (e + 1 < n && emp[e + 1] <= mid) ++e;
    const double c = xs[e];
    acc += abs_linear_integral(q.eval(a, mid) - c, q.eval(b, mid) - c, b - a);
  }
  return acc;
}

Density displacement_interpolation_1d(const Density& m0, const Density& m1, double t) {
  require_1d(m0, "displacement_interpolation_1d");
  require_1d(m1, "displacement_interpolation_1d");
  require(m0.grid == m1.grid, ErrorCode::kShapeMismatch, "displacement_interpolation_1d: grids");
  require(t >= 0.0 && t <= 1.0, ErrorCode::kDomain, "displacement_interpolation_1d: t in [0,1]");
  const GridSpec& g = m0.grid;
  const double mass = (1.0 - t) * m0.mass() + t * m1.mass();
  const double dx = g.dx();
  Density out{g, std::vector<double>(g.cells(), 0.0)};
  auto cell_of = [&](double x) {
    return std::clamp(static_cast<int>(std::floor((x + g.R) / dx)), 0, g.nx - 1);
  };
  for (const auto& [p0, p1] : paired_pieces(m0, m1)) {
    const double xa = (1.0 - t) * p0.xa + t * p1.xa;
    const double xb = (1.0 - t) * p0.xb + t * p1.xb;
    const double mass_piece = (p0.b - p0.a) * mass;
    if (!(xb > xa)) {
      out.values[cell_of(xa)] += mass_piece / dx;
      continue;
    }
    const double dens = mass_piece / (xb - xa);
    for (int j = cell_of(xa); j <= cell_of(xb); ++j) {
      const double lo = std::max(xa, g.face_coord(j)), hi = std::min(xb, g.face_coord(j + 1));
      if (hi > lo) out.values[j] += dens * (hi - lo) / dx;
    }
  }
  return out;
}

double displacement_second_moment_1d(const Density& m0, const Density& m1, double t) {
  require(t >= 0.0 && t <= 1.0, ErrorCode::kDomain, "t in [0,1]");
  double acc = 0.0;
  for (const auto& [p0, p1] : paired_pieces(m0, m1)) {
    const double u = (1.0 - t) * p0.xa + t * p1.xa;
    const double v = (1.0 - t) * p0.xb + t * p1.xb;
    acc += (p0.b - p0.a) * (u * u + u * v + v * v) / 3.0;
  }
  return acc;
}

double displacement_lp_power_1d(const Density& m0, const Density& m1, double t, double p) {
  require(t >= 0.0 && t <= 1.0, ErrorCode::kDomain, "t in [0,1]");
  require(p >= 1.0, ErrorCode::kDomain, "p >= 1");
  double acc = 0.0;
  for (const auto& [p0, p1] : paired_pieces(m0, m1)) {
    const double len = (1.0 - t) * (p0.xb - p0.xa) + t * (p1.xb - p1.xa);
    if (!(len > 0.0)) return kInfinity;
    acc += std::pow(p0.b - p0.a, p) * std::pow(len, 1.0 - p);
  }
  return acc;
}

ModelSpec kl_model(double a, double p) {
  require(a > 0.0 && std::isfinite(a), ErrorCode::kDomain, "kl_model: a must be > 0");
  require(p > 1.0, ErrorCode::kDomain, "kl_model: p must be > 1");
  ModelSpec m;
  m.p = p;
  m.g = 1.0 / a;
  m.V_H = 0.0;
  m.a = p / (2.0 * a);
  m.V_f = 1.0 / (2.0 * a);
  m.c_H = std::max(a, 1.0 / a);
  m.c_H_plus = 0.0;
  m.c_H_minus = 0.0;
  const double coef = p / (2.0 * a);
  m.c_f = std::pow(std::max(coef, 1.0 / coef), 1.0 / p);
  return m;
}

KlCost kl_cost(const Density& m0, const Density& m1, double a, double p,
               const SolverConfig& config) {
  require(m0.grid == m1.grid, ErrorCode::kShapeMismatch, "kl_cost: grids differ");
  const Solution sol = solve_planning(kl_model(a, p), m0.grid, m0.values, m1.values, config);
  KlCost out;
  out.a = a;
  out.iterations = sol.iterations;
  out.converged = sol.converged;
  if (!sol.history.empty()) {
    out.cost = sol.history.back().B;
    out.relative_gap = sol.history.back().relative_gap;
  } else {
    out.cost = primal_energy(kl_model(a, p), sol.m, sol.w);
  }
  return out;
}

double kl_upper_bound(const Density& m0, const Density& m1, double a, double p) {
  require(a > 0.0, ErrorCode::kDomain, "kl_upper_bound: a must be > 0");
  require(m0.grid == m1.grid, ErrorCode::kShapeMismatch, "kl_upper_bound: grids differ");
  const GridSpec& g = m0.grid;
  double acc = 0.0;
  for (std::size_t c = 0; c < g.cells(); ++c) {
    const Vec x = g.cell_center(c);
    const double r2 = x[0] * x[0] + (g.d == 2 ? x[1] * x[1] : 0.0);
    const double u = m0.values[c], v = m1.values[c];
    acc += a * r2 * (u + v) + (std::pow(u, p) + std::pow(v, p)) / (4.0 * a);
  }
  return 1.0 / (2.0 * a) + acc * g.cell_volume();
}

KlDistance kl_distance(const Density& m0, const Density& m1, std::vector<double> a_grid, double p,
                       const SolverConfig& config, bool refine, int refine_steps) {
  require(!a_grid.empty(), ErrorCode::kInvalidArgument, "kl_distance: empty a grid");
  std::sort(a_grid.begin(), a_grid.end());
  a_grid.erase(std::unique(a_grid.begin(), a_grid.end()), a_grid.end());
  KlDistance out;
  std::size_t best = 0;
  for (std::size_t i = 0; i < a_grid.size(); ++i) {
    out.evaluations.push_back(kl_cost(m0, m1, a_grid[i], p, config));
    if (out.evaluations[i].cost < out.evaluations[best].cost) best = i;
  }
  out.value = out.evaluations[best].cost;
  out.argmin_a = a_grid[best];
  if (!refine || refine_steps <= 0) return out;

  double lo = std::log(best > 0 ? a_grid[best - 1] : a_grid[best] / 2.0);
  double hi = std::log(best + 1 < a_grid.size() ? a_grid[best + 1] : a_grid[best] * 2.0);
  auto eval = [&](double la) {
    out.evaluations.push_back(kl_cost(m0, m1, std::exp(la), p, config));
    const KlCost& k = out.evaluations.back();
    if (k.cost < out.value) {
      out.value = k.cost;
      out.argmin_a = k.a;
    }
    return k.cost;
  };
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
  double f1 = eval(x1), f2 = eval(x2);
  for (int it = 2; it < refine_steps; ++it) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - r * (hi - lo);
      f1 = eval(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + r * (hi - lo);
      f2 = eval(x2);
    }
  }
  return out;
}

Density heat_connector(const Density& m, double t) {
  require(t > 0.0 && std::isfinite(t), ErrorCode::kDomain, "heat_connector: t must be > 0");
  const GridSpec& g = m.grid;
  require(m.values.size() == g.cells(), ErrorCode::kShapeMismatch, "heat_connector: size");
  const std::vector<double> K = heat_matrix(g, t);
  const std::size_t n = static_cast<std::size_t>(g.nx);
  std::vector<double> cur = m.values, next(cur.size(), 0.0);
  for (int axis = 0; axis < g.d; ++axis) {
    const AxisLines lines(g, axis);
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t l = 0; l < lines.count(); ++l) {
      const std::size_t base = lines.cell_base(l), st = lines.cell_stride();
      for (std::size_t j = 0; j < n; ++j) {
        const double src = cur[base + j * st];
        if (src == 0.0) continue;
        for (std::size_t i = 0; i < n; ++i) next[base + i * st] += K[i * n + j] * src;
      }
    }
    std::swap(cur, next);
  }
  return {g, std::move(cur)};
}

double fisher_information(const Density& m) {
  const GridSpec& g = m.grid;
  const double dx = g.dx();
  double acc = 0.0;
  for (int axis = 0; axis < g.d; ++axis) {
    const AxisLines lines(g, axis);
    for (std::size_t l = 0; l < lines.count(); ++l) {
      const std::size_t base = lines.cell_base(l), st = lines.cell_stride();
      for (int j = 0; j + 1 < g.nx; ++j) {
        const double a = m.values[base + j * st], b = m.values[base + (j + 1) * st];
        const double avg = 0.5 * (a + b);
        if (avg <= 0.0) continue;
        const double grad = (b - a) / dx;
        acc += grad * grad / avg;
      }
    }
  }
  return acc * g.cell_volume();
}

HeatPathReport heat_path_estimates(const Density& m, double p, const std::vector<double>& times) {
  require(p >= 1.0, ErrorCode::kDomain, "heat_path_estimates: p >= 1");
  require(!times.empty(), ErrorCode::kInvalidArgument, "heat_path_estimates: no times");
  const GridSpec& g = m.grid;
  HeatPathReport rep;
  rep.p = p;
  rep.expected_slope = -(1.0 - 1.0 / p) * g.d / 2.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int nres = 0;
  for (double t : times) {
    const Density s = heat_connector(m, t);
    const SliceNorms norms = slice_norms(g, s.values, p);
    HeatSample hs;
    hs.t = t;
    hs.lp = norms.lp;
    hs.l2 = slice_norms(g, s.values, 2.0).lp;
    hs.fisher = fisher_information(s);
    hs.stated_fisher_bound = g.d / (8.0 * std::numbers::pi * t);
    hs.gaussian_fisher_bound = g.d / (2.0 * t);
    hs.mass = norms.mass;
    hs.boundary_mass = norms.mass > 0.0 ? norms.boundary_mass / norms.mass : 0.0;
    hs.resolved = hs.boundary_mass < 0.01 && std::sqrt(2.0 * t) >= 2.0 * g.dx();
    if (hs.resolved) {
      const double lx = std::log(t), ly = std::log(hs.lp);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      ++nres;
      rep.worst_stated_ratio = std::max(rep.worst_stated_ratio, hs.fisher / hs.stated_fisher_bound);
      rep.worst_gaussian_ratio =
          std::max(rep.worst_gaussian_ratio, hs.fisher / hs.gaussian_fisher_bound);
    }
    rep.samples.push_back(hs);
  }
  if (nres >= 2) {
    const double den = nres * sxx - sx * sx;
    rep.lp_slope = den != 0.0 ? (nres * sxy - sx * sy) / den : 0.0;
    rep.slope_ok = std::abs(rep.lp_slope - rep.expected_slope) <= 0.05;
  }
  rep.stated_fisher_ok = nres > 0 && rep.worst_stated_ratio <= 1.1;
  rep.gaussian_fisher_ok = nres > 0 && rep.worst_gaussian_ratio <= 1.1;
  return rep;
}

}  // namespace mfplan
