#include "mfplan/primal.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "discrete.hpp"
#include "mfplan/dual.hpp"
#include "mfplan/error.hpp"
#include "mfplan/metrics.hpp"
#include "mfplan/parallel.hpp"
#include "mfplan/prox.hpp"

namespace mfplan {

using detail::FaceArrays;

const char* to_string(InitStrategy s) {
  switch (s) {
    case InitStrategy::kLinearBlend: return "linear-blend";
    case InitStrategy::kDisplacement: return "displacement";
    case InitStrategy::kHeatConnector: return "heat-connector";
  }
  return "unknown";
}

InitStrategy parse_init_strategy(std::string_view name) {
  if (name == "linear-blend" || name == "linear") return InitStrategy::kLinearBlend;
  if (name == "displacement") return InitStrategy::kDisplacement;
  if (name == "heat-connector" || name == "heat") return InitStrategy::kHeatConnector;
  fail(ErrorCode::kInvalidArgument, "unknown init strategy '" + std::string(name) + "'");
}

double primal_energy(const DiscreteModel& dm, const DensityField& m, const MomentumField& w) {
  const GridSpec& g = dm.grid;
  require_same_grid(g, m.grid(), "primal_energy");
  require_same_grid(g, w.grid(), "primal_energy");
  double slices = 0.0;
  for (int k = 0; k <= g.nt; ++k) {
    const auto mk = m.slice(k);
    double s = 0.0;
    for (std::size_t c = 0; c < g.cells(); ++c) {
      if (!(mk[c] >= 0.0)) return kInfinity;
      s += F_value(dm.cells[c], mk[c]) + dm.cells[c].V_H * mk[c];
    }
    slices += detail::slice_weight(g, k) * s;
  }
  const FaceArrays rho = detail::face_density(m);
  double kinetic = 0.0;
  for (int a = 0; a < g.d; ++a) {
    const std::size_t nf = g.faces(a);
    const auto& wa = w.component(a);
    for (int k = 0; k < g.nt; ++k) {
      for (std::size_t f = 0; f < nf; ++f) {
        const std::size_t i = k * nf + f;
        kinetic += detail::kinetic_density(dm.faces[a][f], a, rho[a][i], wa[i]);
      }
    }
  }
  return g.spacetime_volume() * (slices + kinetic);
}

double primal_energy(const ModelSpec& model, const DensityField& m, const MomentumField& w) {
  return primal_energy(DiscreteModel(model, m.grid()), m, w);
}

namespace {

void check_endpoints(const GridSpec& g, std::span<const double> m0, std::span<const double> m1) {
  require(m0.size() == g.cells() && m1.size() == g.cells(), ErrorCode::kShapeMismatch,
          "endpoint densities do not match the grid");
  double s0 = 0.0, s1 = 0.0;
  for (std::size_t c = 0; c < g.cells(); ++c) {
    require(std::isfinite(m0[c]) && std::isfinite(m1[c]) && m0[c] >= 0.0 && m1[c] >= 0.0,
            ErrorCode::kDomain, "endpoint densities must be finite and nonnegative");
    s0 += m0[c];
    s1 += m1[c];
  }
  require(s0 > 0.0 && s1 > 0.0, ErrorCode::kDomain, "endpoint densities have zero mass");
  const double vol = g.cell_volume();
  if (std::abs(s0 - s1) * vol > 1e-12 * std::max(1.0, std::max(s0, s1) * vol)) {
    std::ostringstream os;
    os.precision(17);
    os << "endpoint masses differ (" << s0 * vol << " vs " << s1 * vol << ")";
    fail(ErrorCode::kInfeasibleEndpoints, os.str());
  }
}

void rescale_mass(std::span<double> slice, double target, double vol) {
  double s = 0.0;
  for (double v : slice) s += v;
  s *= vol;
  if (s > 0.0) {
    const double f = target / s;
    for (double& v : slice) v *= f;
  }
}

double slice_mass(std::span<const double> slice, double vol) {
  double s = 0.0;
  for (double v : slice) s += v;
  return s * vol;
}

}  // namespace

FlowPair initialize_flow(InitStrategy strategy, const GridSpec& g, std::span<const double> m0,
                         std::span<const double> m1, double heat_time) {
  g.validate();
  check_endpoints(g, m0, m1);
  const double vol = g.cell_volume();
  const double mass = slice_mass(m0, vol);
  DensityField m(g);
  std::copy(m0.begin(), m0.end(), m.slice(0).begin());
  std::copy(m1.begin(), m1.end(), m.slice(g.nt).begin());

  switch (strategy) {
    case InitStrategy::kLinearBlend:
      for (int k = 1; k < g.nt; ++k) {
        const double t = k * g.dt();
        auto mk = m.slice(k);
        for (std::size_t c = 0; c < g.cells(); ++c) mk[c] = (1.0 - t) * m0[c] + t * m1[c];
      }
      break;
    case InitStrategy::kDisplacement: {
      require(g.d == 1, ErrorCode::kUnsupported,
              "displacement initialisation is only available for d = 1");
      const Density a{g, {m0.begin(), m0.end()}}, b{g, {m1.begin(), m1.end()}};
      for (int k = 1; k < g.nt; ++k) {
        const Density mk = displacement_interpolation_1d(a, b, k * g.dt());
        std::copy(mk.values.begin(), mk.values.end(), m.slice(k).begin());
        rescale_mass(m.slice(k), mass, vol);
      }
      break;
    }
    case InitStrategy::kHeatConnector: {
      require(heat_time > 0.0, ErrorCode::kInvalidArgument, "heat_time must be > 0");
      const Density a{g, {m0.begin(), m0.end()}}, b{g, {m1.begin(), m1.end()}};
      const Density sa = heat_connector(a, heat_time), sb = heat_connector(b, heat_time);
      for (int k = 1; k < g.nt; ++k) {
        const double t = k * g.dt();
        auto mk = m.slice(k);
        if (3.0 * t <= 1.0) {
          const Density s = heat_connector(a, heat_time * 3.0 * t);
          std::copy(s.values.begin(), s.values.end(), mk.begin());
        } else if (3.0 * t >= 2.0) {
          const Density s = heat_connector(b, heat_time * 3.0 * (1.0 - t));
          std::copy(s.values.begin(), s.values.end(), mk.begin());
        } else {
          const double lam = 3.0 * t - 1.0;
          for (std::size_t c = 0; c < g.cells(); ++c) {
            mk[c] = (1.0 - lam) * sa.values[c] + lam * sb.values[c];
          }
        }
        rescale_mass(mk, mass, vol);
      }
      break;
    }
  }
  MomentumField w = momentum_for(m);
  return {std::move(m), std::move(w)};
}

VelocityField recover_velocity(const DensityField& m, const MomentumField& w, double delta) {
  require(delta >= 0.0, ErrorCode::kInvalidArgument, "recover_velocity: delta must be >= 0");
  const GridSpec& g = m.grid();
  require_same_grid(g, w.grid(), "recover_velocity");
  VelocityField out;
  out.grid = g;
  out.delta = delta;
  const std::size_t n = g.nt * g.cells();
  out.density.resize(n);
  out.mask.assign(n, 0);
  for (int k = 0; k < g.nt; ++k) {
    for (std::size_t c = 0; c < g.cells(); ++c) {
      out.density[k * g.cells() + c] = 0.5 * (m.at(k, c) + m.at(k + 1, c));
    }
  }
  const auto centred = interp_face_to_center(w);
  for (int a = 0; a < g.d; ++a) out.v[a].assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (out.density[i] > delta) {
      out.mask[i] = 1;
      for (int a = 0; a < g.d; ++a) out.v[a][i] = centred[a][i] / out.density[i];
    }
  }
  return out;
}

namespace {

// Dual variables of the lifted problem.
struct Lifted {
  FaceArrays rho;
  FaceArrays w;
  SliceField m;  // interior slices only
};

Lifted lifted_zero(const GridSpec& g) {
  Lifted y;
  for (int a = 0; a < g.d; ++a) {
    y.rho[a].assign(g.nt * g.faces(a), 0.0);
    y.w[a].assign(g.nt * g.faces(a), 0.0);
  }
  y.m = SliceField(g);
  return y;
}

void lift(const DensityField& m, const MomentumField& w, Lifted& out) {
  const GridSpec& g = m.grid();
  out.rho = detail::face_density(m);
  for (int a = 0; a < g.d; ++a) out.w[a] = w.component(a);
  out.m = m;
  auto first = out.m.slice(0), last = out.m.slice(g.nt);
  std::fill(first.begin(), first.end(), 0.0);
  std::fill(last.begin(), last.end(), 0.0);
}

void lift_adjoint(const Lifted& y, DensityField& m, MomentumField& w) {
  const GridSpec& g = y.m.grid();
  m = y.m;  // endpoint slices of y.m are zero
  detail::add_face_density_adjoint(g, y.rho, 1.0, m);
  w = MomentumField(g);
  for (int a = 0; a < g.d; ++a) w.component(a) = y.w[a];
  w.enforce_no_flux();
}

double sum_squares(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

double lifted_norm2(const Lifted& y) {
  double s = sum_squares(y.m.values());
  for (int a = 0; a < y.m.grid().d; ++a) s += sum_squares(y.rho[a]) + sum_squares(y.w[a]);
  return s;
}

double flow_norm2(const DensityField& m, const MomentumField& w) {
  double s = sum_squares(m.values());
  for (int a = 0; a < m.grid().d; ++a) s += sum_squares(w.component(a));
  return s;
}

struct Restored {
  DensityField m;
  MomentumField w;
  double theta = 0.0;
  double energy = 0.0;
};

// Smallest blend towards a strictly positive feasible reference that makes the
// pair admissible (nonnegative density, no flux through vacuum).
Restored restore(const DiscreteModel& dm, const DensityField& m, const MomentumField& w,
                 const FlowPair& ref) {
  const GridSpec& g = dm.grid;
  double theta = 0.0;
  for (int k = 1; k < g.nt; ++k) {
    for (std::size_t c = 0; c < g.cells(); ++c) {
      const double v = m.at(k, c);
      if (v < 0.0) theta = std::max(theta, -v / (ref.m.at(k, c) - v));
    }
  }
  if (theta > 0.0) theta = std::min(1.0, theta * (1.0 + 1e-12) + 1e-300);

  auto blend = [&](double th) {
    Restored r{m, w, th, 0.0};
    if (th > 0.0) {
      auto& mv = r.m.values();
      const auto& rv = ref.m.values();
      for (std::size_t i = 0; i < mv.size(); ++i) {
        mv[i] = (1.0 - th) * mv[i] + th * rv[i];
        if (mv[i] < 0.0) mv[i] = 0.0;
      }
      for (int a = 0; a < g.d; ++a) {
        auto& wv = r.w.component(a);
        const auto& rw = ref.w.component(a);
        for (std::size_t i = 0; i < wv.size(); ++i) wv[i] = (1.0 - th) * wv[i] + th * rw[i];
      }
    }
    r.energy = primal_energy(dm, r.m, r.w);
    return r;
  };

  Restored best = blend(theta);
  if (std::isfinite(best.energy)) return best;

  // Flux through vacuum: the energy along the segment is convex, search it.
  double lo = theta, hi = 1.0;
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - ratio * (hi - lo), x2 = lo + ratio * (hi - lo);
  Restored r1 = blend(x1), r2 = blend(x2);
  for (int it = 0; it < 80; ++it) {
    if (r1.energy <= r2.energy) {
      hi = x2;
      x2 = x1;
      r2 = std::move(r1);
      x1 = hi - ratio * (hi - lo);
      r1 = blend(x1);
    } else {
      lo = x1;
      x1 = x2;
      r1 = std::move(r2);
      x2 = lo + ratio * (hi - lo);
      r2 = blend(x2);
    }
  }
  best = r1.energy <= r2.energy ? std::move(r1) : std::move(r2);
  require(std::isfinite(best.energy), ErrorCode::kNumerical,
          "could not restore an admissible primal iterate");
  return best;
}

FlowPair restoration_reference(const GridSpec& g, std::span<const double> m0,
                               std::span<const double> m1, double beta) {
  const double vol = g.cell_volume();
  const double mass = slice_mass(m0, vol);
  const double uniform = mass / (static_cast<double>(g.cells()) * vol);
  DensityField m(g);
  std::copy(m0.begin(), m0.end(), m.slice(0).begin());
  std::copy(m1.begin(), m1.end(), m.slice(g.nt).begin());
  for (int k = 1; k < g.nt; ++k) {
    const double t = k * g.dt();
    const double bump = 4.0 * beta * t * (1.0 - t);
    auto mk = m.slice(k);
    for (std::size_t c = 0; c < g.cells(); ++c) {
      mk[c] = (1.0 - bump) * ((1.0 - t) * m0[c] + t * m1[c]) + bump * uniform;
    }
    rescale_mass(mk, mass, vol);
  }
  MomentumField w = momentum_for(m);
  return {std::move(m), std::move(w)};
}

}  // namespace

double estimate_lift_norm(const GridSpec& g, int iterations) {
  g.validate();
  require(iterations >= 1, ErrorCode::kInvalidArgument, "power iterations must be >= 1");
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  DensityField m(g);
  MomentumField w(g);
  for (double& v : m.values()) v = U(rng);
  for (int a = 0; a < g.d; ++a) {
    for (double& v : w.component(a)) v = U(rng);
  }
  w.enforce_no_flux();
  Lifted y = lifted_zero(g);
  double estimate = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const double n = std::sqrt(flow_norm2(m, w));
    for (double& v : m.values()) v /= n;
    for (int a = 0; a < g.d; ++a) {
      for (double& v : w.component(a)) v /= n;
    }
    lift(m, w, y);
    estimate = std::sqrt(lifted_norm2(y));
    lift_adjoint(y, m, w);
  }
  return estimate;
}

Solution solve_planning(const ModelSpec& model, const GridSpec& grid, std::span<const double> m0,
                        std::span<const double> m1, const SolverConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  model.validate();
  grid.validate();
  check_endpoints(grid, m0, m1);
  require(config.max_iters >= 1, ErrorCode::kInvalidArgument, "max_iters must be >= 1");
  require(config.check_every >= 1, ErrorCode::kInvalidArgument, "check_every must be >= 1");
  require(config.theta >= 0.0 && config.theta <= 1.0, ErrorCode::kInvalidArgument,
          "over-relaxation must lie in [0,1]");
  require(config.step_ratio > 0.0, ErrorCode::kInvalidArgument, "step_ratio must be > 0");
  require(config.reference_bump > 0.0 && config.reference_bump <= 1.0,
          ErrorCode::kInvalidArgument, "reference_bump must lie in (0,1]");

  const GridSpec& g = grid;
  const DiscreteModel dm(model, g);
  const ContinuityProjector projector(g);

  FlowPair x = initialize_flow(config.init, g, m0, m1, config.heat_time);
  projector.project(x.m, x.w, m0, m1);
  const FlowPair reference = restoration_reference(g, m0, m1, config.reference_bump);

  Solution sol;
  sol.grid = g;
  sol.m0.assign(m0.begin(), m0.end());
  sol.m1.assign(m1.begin(), m1.end());
  sol.operator_norm = estimate_lift_norm(g, config.power_iterations);
  const double base = 0.95 / sol.operator_norm;
  sol.tau = config.tau_primal > 0.0 ? config.tau_primal : base * std::sqrt(config.step_ratio);
  sol.sigma = config.tau_dual > 0.0 ? config.tau_dual : base / std::sqrt(config.step_ratio);
  if (!(sol.tau * sol.sigma * sol.operator_norm * sol.operator_norm < 1.0)) {
    std::ostringstream os;
    os << "step sizes violate tau*sigma*||K||^2 < 1 (tau=" << sol.tau << ", sigma=" << sol.sigma
       << ", ||K||=" << sol.operator_norm << ")";
    fail(ErrorCode::kInvalidArgument, os.str());
  }
  const double tau = sol.tau, sigma = sol.sigma;

  // Face coefficients with the drift reduced to the face-normal component.
  std::array<std::vector<PointModel>, 2> face_models;
  std::array<std::vector<std::uint8_t>, 2> boundary;
  for (int a = 0; a < g.d; ++a) {
    face_models[a] = dm.faces[a];
    for (auto& c : face_models[a]) c.z = {c.z[a], 0.0};
    boundary[a].assign(g.faces(a), 0);
    const AxisLines lines(g, a);
    for (std::size_t l = 0; l < lines.count(); ++l) {
      boundary[a][lines.face_base(l)] = 1;
      boundary[a][lines.face_base(l) + g.nx * lines.face_stride()] = 1;
    }
  }

  Lifted y = lifted_zero(g), ky = lifted_zero(g);
  FlowPair xbar = x;
  DensityField km;
  MomentumField kw;

  auto certify = [&](int iteration, double primal_change, double dual_change) {
    lift_adjoint(y, km, kw);
    CellField u = projector.apply(km, kw);
    projector.solve_normal(u);
    Restored r = restore(dm, x.m, x.w, reference);
    DualPair pair = recover_dual(dm, r.m, std::move(u));
    const double delta =
        config.density_floor >= 0.0 ? config.density_floor : default_density_floor(r.m);
    DiagnosticsReport rep = duality_report(dm, r.m, r.w, pair.u, pair.alpha, delta);
    HistoryEntry h;
    h.iteration = iteration;
    h.B = rep.B;
    h.A = rep.A;
    h.gap = rep.gap;
    h.relative_gap = rep.relative_gap;
    h.yh_integral = rep.yh_integral;
    h.yf_integral = rep.yf_integral;
    h.defect_mass = rep.defect_mass;
    h.primal_change = primal_change;
    h.dual_change = dual_change;
    h.continuity_residual = rep.continuity_residual;
    h.restoration_blend = r.theta;
    h.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    sol.history.push_back(h);
    if (config.on_check) config.on_check(h);
    sol.m = std::move(r.m);
    sol.w = std::move(r.w);
    sol.u = std::move(pair.u);
    sol.alpha = std::move(pair.alpha);
    sol.restoration_blend = r.theta;
    sol.delta = delta;
    return h;
  };

  const std::size_t ncell = g.cells();
  int it = 0;
  bool certified_last = false;
  for (it = 1; it <= config.max_iters; ++it) {
    certified_last = false;
    // Dual ascent with the conjugate prox (Moreau identity).
    lift(xbar.m, xbar.w, ky);
    double dual_delta = 0.0;
    for (int a = 0; a < g.d; ++a) {
      const std::size_t nf = g.faces(a);
      const auto& fm = face_models[a];
      const auto& bd = boundary[a];
      auto& yr = y.rho[a];
      auto& yw = y.w[a];
      const auto& kr = ky.rho[a];
      const auto& kwv = ky.w[a];
      std::vector<double> change(static_cast<std::size_t>(g.nt), 0.0);
      parallel_for(static_cast<std::size_t>(g.nt), [&](std::size_t k) {
        double local = 0.0;
        for (std::size_t f = 0; f < nf; ++f) {
          const std::size_t i = k * nf + f;
          const double tr = yr[i] + sigma * kr[i];
          const PointModel& c = fm[f];
          double nr, nw;
          if (bd[f]) {
            nr = std::min(tr, c.z[0] * c.z[0] / (2.0 * c.g));
            nw = 0.0;
          } else {
            const double tw = yw[i] + sigma * kwv[i];
            const ProxResult p = prox_kinetic(c, tr / sigma, {tw / sigma, 0.0}, 1.0 / sigma);
            nr = tr - sigma * p.m;
            nw = tw - sigma * p.w[0];
          }
          local += (nr - yr[i]) * (nr - yr[i]) + (nw - yw[i]) * (nw - yw[i]);
          yr[i] = nr;
          yw[i] = nw;
        }
        change[k] = local;
      });
      for (double v : change) dual_delta += v;
    }
    {
      std::vector<double> change(static_cast<std::size_t>(g.nt), 0.0);
      parallel_for(static_cast<std::size_t>(g.nt - 1), [&](std::size_t kk) {
        const int k = static_cast<int>(kk) + 1;
        double local = 0.0;
        auto yk = y.m.slice(k);
        const auto xk = ky.m.slice(k);
        for (std::size_t c = 0; c < ncell; ++c) {
          const double t = yk[c] + sigma * xk[c];
          const double n = t - sigma * prox_coupling(dm.cells[c], t / sigma, 1.0 / sigma);
          local += (n - yk[c]) * (n - yk[c]);
          yk[c] = n;
        }
        change[kk] = local;
      });
      for (double v : change) dual_delta += v;
    }
    if (!std::isfinite(dual_delta)) {
      std::ostringstream os;
      os << "non-finite dual update at iteration " << it << "; check model scaling";
      fail(ErrorCode::kNumerical, os.str());
    }

    // Primal descent followed by projection onto the continuity set.
    lift_adjoint(y, km, kw);
    FlowPair next = x;
    {
      auto& mv = next.m.values();
      const auto& kmv = km.values();
      for (std::size_t i = 0; i < mv.size(); ++i) mv[i] -= tau * kmv[i];
      for (int a = 0; a < g.d; ++a) {
        auto& wv = next.w.component(a);
        const auto& kwa = kw.component(a);
        for (std::size_t i = 0; i < wv.size(); ++i) wv[i] -= tau * kwa[i];
      }
    }
    projector.project(next.m, next.w, m0, m1);

    double primal_delta = 0.0;
    {
      auto& bm = xbar.m.values();
      const auto& nm = next.m.values();
      const auto& om = x.m.values();
      for (std::size_t i = 0; i < nm.size(); ++i) {
        const double d = nm[i] - om[i];
        primal_delta += d * d;
        bm[i] = nm[i] + config.theta * d;
      }
      for (int a = 0; a < g.d; ++a) {
        auto& bw = xbar.w.component(a);
        const auto& nw = next.w.component(a);
        const auto& ow = x.w.component(a);
        for (std::size_t i = 0; i < nw.size(); ++i) {
          const double d = nw[i] - ow[i];
          primal_delta += d * d;
          bw[i] = nw[i] + config.theta * d;
        }
      }
    }
    x = std::move(next);

    const double pc = std::sqrt(primal_delta) / (tau * std::max(1.0, std::sqrt(flow_norm2(x.m, x.w))));
    const double dc = std::sqrt(dual_delta) / (sigma * std::max(1.0, std::sqrt(lifted_norm2(y))));
    const bool residual_stop = config.stop_residual > 0.0 && std::max(pc, dc) <= config.stop_residual;
    if (it % config.check_every == 0 || it == config.max_iters || residual_stop) {
      const HistoryEntry h = certify(it, pc, dc);
      certified_last = true;
      if ((std::isfinite(h.relative_gap) && h.relative_gap <= config.stop_gap) || residual_stop) {
        sol.converged = true;
        break;
      }
    }
  }
  if (!certified_last) certify(std::min(it, config.max_iters), 0.0, 0.0);
  sol.iterations = std::min(it, config.max_iters);
  sol.v = recover_velocity(sol.m, sol.w, sol.delta);
  sol.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return sol;
}

AprioriReport apriori_check(const ModelSpec& model, const Solution& sol) {
  const GridSpec& g = sol.grid;
  const DiscreteModel dm(model, g);
  AprioriReport rep;
  const double h = g.spacetime_volume();
  const double vol = g.cell_volume();
  const double p = model.p, q = model.q();
  const double B = primal_energy(dm, sol.m, sol.w);
  rep.finite = std::isfinite(B);

  const FaceArrays rho = detail::face_density(sol.m);
  const double r = 2.0 * p / (p + 1.0);
  double kin = 0.0, wr = 0.0, rhop = 0.0;
  for (int a = 0; a < g.d; ++a) {
    const auto& wa = sol.w.component(a);
    for (std::size_t i = 0; i < wa.size(); ++i) {
      if (rho[a][i] > 0.0) kin += wa[i] * wa[i] / rho[a][i];
      else if (wa[i] != 0.0) kin = kInfinity;
      wr += std::pow(std::abs(wa[i]), r);
      rhop += std::pow(std::max(rho[a][i], 0.0), p);
    }
  }
  rep.kinetic = h * kin;
  rep.momentum_norm = std::pow(h * wr, 1.0 / r);
  rep.holder_rhs = std::pow(h * rhop, 1.0 / (2.0 * p)) * std::sqrt(rep.kinetic);
  rep.holder_ok = rep.momentum_norm <= rep.holder_rhs * (1.0 + 1e-12) + 1e-300;

  double lp = 0.0, first = 0.0;
  for (int k = 0; k <= g.nt; ++k) {
    const double wk = detail::slice_weight(g, k);
    const auto mk = sol.m.slice(k);
    double s2 = 0.0;
    for (std::size_t c = 0; c < g.cells(); ++c) {
      const auto x = g.cell_center(c);
      const double r2 = x[0] * x[0] + x[1] * x[1];
      lp += wk * std::pow(std::max(mk[c], 0.0), p);
      first += wk * (1.0 + std::sqrt(r2)) * mk[c];
      s2 += r2 * mk[c];
    }
    rep.root_moment.push_back(std::sqrt(std::max(s2 * vol, 0.0)));
  }
  rep.lp_integral = h * lp;
  rep.first_moment = h * first;

  double cf_sum = 0.0;
  for (std::size_t c = 0; c < g.cells(); ++c) cf_sum += std::pow(std::abs(dm.cells[c].V_f), q);
  const double C_f = std::pow(cf_sum * vol, 1.0 / q);
  const double C_F = std::pow(2.0 * model.c_f * C_f, q) / q;
  const double c = 2.0 * std::max(model.c_H, p * std::pow(model.c_f, p));
  rep.energy_bound = c * (B + C_F + model.c_H_plus * rep.first_moment);
  rep.energy_ok = rep.kinetic + rep.lp_integral <= rep.energy_bound;

  const double M0 = rep.root_moment.front() * rep.root_moment.front();
  const double M1 = rep.root_moment.back() * rep.root_moment.back();
  const double C3 = C_F + 0.5 * model.c_H_plus * model.c_H_plus;
  rep.moment_bound = std::numbers::e * std::sqrt(std::max(M0 + M1 + 2.0 * model.c_H * (C3 + B), 0.0));
  rep.moment_ok = true;
  for (double v : rep.root_moment) rep.moment_ok = rep.moment_ok && v <= rep.moment_bound;
  rep.finite = rep.finite && std::isfinite(rep.kinetic) && std::isfinite(rep.momentum_norm);
  return rep;
}

}  // namespace mfplan
