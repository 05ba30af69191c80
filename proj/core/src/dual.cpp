#include "mfplan/dual.hpp"

#include <algorithm>
#include <cmath>

#include "discrete.hpp"
#include "mfplan/error.hpp"

namespace mfplan {

using detail::FaceArrays;

double default_density_floor(const DensityField& m) {
  double mx = 0.0;
  for (double v : m.values()) mx = std::max(mx, v);
  return 1e-8 * mx;
}

SliceField hj_value(const DiscreteModel& dm, const CellField& u) {
  require_same_grid(dm.grid, u.grid(), "hj_value");
  const FaceArrays h = detail::face_hamiltonian(dm, detail::face_momentum(u));
  return detail::hj_expression(dm, u, h);
}

DualPair recover_dual(const DiscreteModel& dm, const DensityField& m, CellField u) {
  const GridSpec& g = dm.grid;
  require_same_grid(g, m.grid(), "recover_dual");
  require_same_grid(g, u.grid(), "recover_dual");
  const auto m1 = m.slice(g.nt);
  double num = 0.0, den = 0.0;
  for (std::size_t c = 0; c < g.cells(); ++c) {
    num += u.at(g.nt - 1, c) * m1[c];
    den += m1[c];
  }
  if (den > 0.0) {
    const double shift = num / den;
    for (double& v : u.values()) v -= shift;
  }
  SliceField alpha = hj_value(dm, u);
  for (int k = 1; k < g.nt; ++k) {
    for (std::size_t c = 0; c < g.cells(); ++c) {
      const double f = coupling_f(dm.cells[c], std::max(m.at(k, c), 0.0));
      alpha.at(k, c) = std::max(alpha.at(k, c), f);
    }
  }
  std::copy(alpha.slice(1).begin(), alpha.slice(1).end(), alpha.slice(0).begin());
  std::copy(alpha.slice(g.nt - 1).begin(), alpha.slice(g.nt - 1).end(),
            alpha.slice(g.nt).begin());
  return {std::move(u), std::move(alpha)};
}

DualPair recover_dual(const ModelSpec& model, const Solution& solution) {
  return recover_dual(DiscreteModel(model, solution.grid), solution.m, solution.u);
}

SliceField clamp_alpha(const DiscreteModel& dm, const SliceField& alpha) {
  require_same_grid(dm.grid, alpha.grid(), "clamp_alpha");
  SliceField out = alpha;
  for (std::size_t k = 0; k < out.slices(); ++k) {
    auto ak = out.slice(k);
    for (std::size_t c = 0; c < ak.size(); ++c) ak[c] = std::max(ak[c], dm.cells[c].V_f);
  }
  return out;
}

double dual_energy(const DiscreteModel& dm, const CellField& u, const SliceField& alpha,
                   std::span<const double> m0, std::span<const double> m1) {
  const GridSpec& g = dm.grid;
  require_same_grid(g, u.grid(), "dual_energy");
  require_same_grid(g, alpha.grid(), "dual_energy");
  require(m0.size() == g.cells() && m1.size() == g.cells(), ErrorCode::kShapeMismatch,
          "dual_energy: endpoint size");
  const FaceArrays h = detail::face_hamiltonian(dm, detail::face_momentum(u));
  double traces = 0.0, ends = 0.0, fstar = 0.0;
  for (std::size_t c = 0; c < g.cells(); ++c) {
    const PointModel& pm = dm.cells[c];
    traces += u.at(0, c) * m0[c] - u.at(g.nt - 1, c) * m1[c];
    ends += 0.5 * (F_value(pm, m0[c]) + pm.V_H * m0[c]) -
            m0[c] * detail::quarter_face_sum(g, h, 0, c);
    ends += 0.5 * (F_value(pm, m1[c]) + pm.V_H * m1[c]) -
            m1[c] * detail::quarter_face_sum(g, h, g.nt - 1, c);
  }
  for (int k = 1; k < g.nt; ++k) {
    for (std::size_t c = 0; c < g.cells(); ++c) fstar += F_star_value(dm.cells[c], alpha.at(k, c));
  }
  return g.cell_volume() * traces + g.spacetime_volume() * (ends - fstar);
}

double dual_energy(const ModelSpec& model, const CellField& u, const SliceField& alpha,
                   std::span<const double> m0, std::span<const double> m1) {
  return dual_energy(DiscreteModel(model, u.grid()), u, alpha, m0, m1);
}

SliceField hj_residual(const DiscreteModel& dm, const CellField& u, const SliceField& alpha) {
  require_same_grid(dm.grid, alpha.grid(), "hj_residual");
  SliceField r = hj_value(dm, u);
  const GridSpec& g = dm.grid;
  for (int k = 1; k < g.nt; ++k) {
    for (std::size_t c = 0; c < g.cells(); ++c) r.at(k, c) = std::max(r.at(k, c) - alpha.at(k, c), 0.0);
  }
  return r;
}

SliceField hj_residual(const ModelSpec& model, const CellField& u, const SliceField& alpha) {
  return hj_residual(DiscreteModel(model, u.grid()), u, alpha);
}

DiagnosticsReport duality_report(const DiscreteModel& dm, const DensityField& m,
                                 const MomentumField& w, const CellField& u,
                                 const SliceField& alpha, double delta) {
  const GridSpec& g = dm.grid;
  require_same_grid(g, m.grid(), "duality_report");
  require_same_grid(g, w.grid(), "duality_report");
  require_same_grid(g, u.grid(), "duality_report");
  require_same_grid(g, alpha.grid(), "duality_report");
  const double h = g.spacetime_volume();
  DiagnosticsReport rep;
  rep.delta = delta;

  rep.B = primal_energy(dm, m, w);
  rep.A = dual_energy(dm, u, alpha, m.slice(0), m.slice(g.nt));
  rep.gap = rep.B - rep.A;
  rep.relative_gap = rep.gap / std::max(1.0, std::abs(rep.B));

  const FaceArrays P = detail::face_momentum(u);
  const FaceArrays hf = detail::face_hamiltonian(dm, P);
  const FaceArrays rho = detail::face_density(m);
  double yh = 0.0;
  for (int a = 0; a < g.d; ++a) {
    const std::size_t nf = g.faces(a);
    const auto& wa = w.component(a);
    for (int k = 0; k < g.nt; ++k) {
      for (std::size_t f = 0; f < nf; ++f) {
        const std::size_t i = k * nf + f;
        const PointModel& c = dm.faces[a][f];
        yh += detail::kinetic_density(c, a, rho[a][i], wa[i]) + wa[i] * P[a][i] +
              rho[a][i] * hf[a][i];
      }
    }
  }
  rep.yh_integral = h * yh;

  const SliceField hj = detail::hj_expression(dm, u, hf);
  double yf = 0.0, yf_support = 0.0, defect = 0.0, viol = 0.0, viol_support = 0.0;
  double min_slack = kInfinity;
  for (int k = 1; k < g.nt; ++k) {
    for (std::size_t c = 0; c < g.cells(); ++c) {
      const PointModel& pc = dm.cells[c];
      const double mk = m.at(k, c), ak = alpha.at(k, c), hk = hj.at(k, c);
      const double F = mk >= 0.0 ? F_value(pc, mk) : kInfinity;
      const double y = F + F_star_value(pc, ak) - ak * mk;
      yf += y;
      defect += mk * (ak - hk);
      const double v = std::max(hk - ak, 0.0);
      viol += v;
      if (mk > delta) {
        viol_support += v;
        yf_support += y;
      }
      min_slack = std::min(min_slack, ak - pc.V_f);
    }
  }
  rep.yf_integral = h * yf;
  rep.yf_support = h * yf_support;
  rep.hj_violation = h * viol;
  rep.hj_violation_support = h * viol_support;
  rep.min_alpha_slack = min_slack;

  // Pairing of u with the continuity residual; zero for feasible flows.
  const CellField res = continuity_residual(m, w);
  double pairing = 0.0;
  for (std::size_t i = 0; i < res.values().size(); ++i) pairing += u.values()[i] * res.values()[i];
  rep.continuity_residual = max_abs(res.values());

  rep.defect_mass = rep.gap - rep.yh_integral - rep.yf_integral;
  rep.contact_defect = h * defect;
  rep.constraint_pairing = h * pairing;
  rep.identity_error = std::abs(rep.defect_mass - rep.contact_defect - rep.constraint_pairing);

  const WeightedNorms norms = weighted_norms(m, dm.p);
  rep.per_slice = norms.per_slice;
  const double mass0 = norms.per_slice.front().mass;
  for (const SliceNorms& s : norms.per_slice) {
    rep.mass_drift = std::max(rep.mass_drift, std::abs(s.mass - mass0));
    rep.boundary_mass = std::max(rep.boundary_mass, s.boundary_mass);
  }
  return rep;
}

DiagnosticsReport duality_report(const ModelSpec& model, const Solution& solution) {
  DiagnosticsReport rep = duality_report(DiscreteModel(model, solution.grid), solution.m,
                                         solution.w, solution.u, solution.alpha, solution.delta);
  rep.restoration_blend = solution.restoration_blend;
  return rep;
}

}  // namespace mfplan
