#include <doctest.h>

#include <cmath>
#include <random>

#include "mfplan/densities.hpp"
#include "mfplan/dual.hpp"
#include "mfplan/error.hpp"
#include "mfplan/metrics.hpp"
#include "mfplan/primal.hpp"

using namespace mfplan;

namespace {

ModelSpec quadratic_model(double a = 1.0) {
  ModelSpec m;
  m.p = 2.0;
  m.a = a;
  return m;
}

SolverConfig quick_config(int iters = 3000) {
  SolverConfig c;
  c.max_iters = iters;
  c.check_every = 25;
  c.stop_gap = 1e-5;
  return c;
}

}  // namespace

TEST_SUITE("primal") {
  TEST_CASE("energy of a two-cell flow by hand") {
    GridSpec g{1, 2, 4, 2.0};  // dt = 1/2, dx = 1; cells 2 and 3 stay empty
    const double ma[3] = {0.9, 0.5, 0.2}, mb[3] = {0.1, 0.5, 0.8}, s[2] = {0.3, 0.25};
    DensityField m(g);
    for (int k = 0; k < 3; ++k) {
      m.at(k, 0) = ma[k];
      m.at(k, 1) = mb[k];
    }
    MomentumField w(g);
    w.step(0, 0)[1] = s[0];
    w.step(0, 1)[1] = s[1];
    const double tw[3] = {0.5, 1.0, 0.5};
    double expect = 0.0, expect2 = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double F = 0.5 * (ma[k] * ma[k] + mb[k] * mb[k]);
      expect += tw[k] * F;
      expect2 += tw[k] * (F + (0.25 + 0.1) * (ma[k] + mb[k]));
    }
    // Drift and potentials enter through |w + z rho|^2/(2 g rho) and V_H m.
    for (int k = 0; k < 2; ++k) {
      const double rl = 0.25 * (ma[k] + ma[k + 1]), rr = 0.25 * (mb[k] + mb[k + 1]);
      const double rho = rl + rr;
      expect += s[k] * s[k] / (2.0 * rho);
      expect2 += (s[k] + 0.5 * rho) * (s[k] + 0.5 * rho) / (4.0 * rho) + (0.5 * rl) * (0.5 * rl) / (4.0 * rl) +
                 (0.5 * rr) * (0.5 * rr) / (4.0 * rr);
    }
    CHECK(primal_energy(quadratic_model(), m, w) == doctest::Approx(0.5 * expect).epsilon(1e-14));
    ModelSpec dz = quadratic_model();
    dz.g = 2.0;
    dz.z[0] = 0.5;
    dz.V_H = 0.25;
    dz.V_f = 0.1;
    CHECK(primal_energy(dz, m, w) == doctest::Approx(0.5 * expect2).epsilon(1e-14));
  }

  TEST_CASE("flux through vacuum and negative density are infinite") {
    GridSpec g{1, 2, 4, 2.0};
    DensityField m(g);
    MomentumField w(g);
    w.step(0, 0)[1] = 0.1;
    CHECK(std::isinf(primal_energy(quadratic_model(), m, w)));
    m.at(0, 0) = -0.1;
    w.step(0, 0)[1] = 0.0;
    CHECK(std::isinf(primal_energy(quadratic_model(), m, w)));
  }

  TEST_CASE("initialisations are feasible and mass preserving") {
    GridSpec g{1, 8, 32, 2.0};
    const Density a = gaussian_density(g, {-0.5, 0}, 0.3), b = gaussian_density(g, {0.6, 0}, 0.2);
    for (InitStrategy s : {InitStrategy::kLinearBlend, InitStrategy::kDisplacement, InitStrategy::kHeatConnector}) {
      const FlowPair f = initialize_flow(s, g, a.values, b.values);
      CHECK(max_abs(continuity_residual(f.m, f.w).values()) < 1e-10);
      for (int k = 0; k <= g.nt; ++k) CHECK(slice_norms(g, f.m.slice(k), 2.0).mass == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(parse_init_strategy("heat") == InitStrategy::kHeatConnector);
    CHECK_THROWS_AS(parse_init_strategy("nope"), Error);
  }

  TEST_CASE("stationary uniform problem costs the coupling integral") {
    GridSpec g{1, 8, 16, 1.0};
    std::vector<double> m(16, 0.5);
    const Solution s = solve_planning(quadratic_model(), g, m, m, quick_config(500));
    const double expect = 0.5 * 0.5 * 0.5 * 2.0;  // integral of m^2/2 over [-1,1] times T = 1
    CHECK(s.history.back().B == doctest::Approx(expect).epsilon(1e-9));
    CHECK(max_abs(s.w.component(0)) < 1e-9);
  }

  TEST_CASE("translation cost approaches half the squared Wasserstein distance") {
    GridSpec g{1, 32, 32, 2.0};
    const Density a = gaussian_density(g, {-0.5, 0}, 0.3), b = gaussian_density(g, {0.5, 0}, 0.3);
    const Solution s = solve_planning(quadratic_model(2e-3), g, a.values, b.values, quick_config(4000));
    const double w2 = w2_1d(a, b);
    CHECK(std::abs(s.history.back().B - 0.5 * w2 * w2) / (w2 * w2) < 0.05);
    for (const HistoryEntry& h : s.history) CHECK(h.gap >= -1e-12);
  }

  TEST_CASE("time reversal leaves the cost unchanged") {
    GridSpec g{1, 16, 24, 2.0};
    const Density a = gaussian_density(g, {-0.4, 0}, 0.3), b = bimodal_density(g, {0.2, 0}, {0.9, 0}, 0.2);
    const Solution f = solve_planning(quadratic_model(), g, a.values, b.values, quick_config());
    const Solution r = solve_planning(quadratic_model(), g, b.values, a.values, quick_config());
    CHECK(std::abs(f.history.back().B - r.history.back().B) / f.history.back().B < 1e-3);
  }

  TEST_CASE("a-priori bounds hold on a solved flow") {
    GridSpec g{1, 16, 24, 2.0};
    const Density a = gaussian_density(g, {-0.4, 0}, 0.3), b = gaussian_density(g, {0.4, 0}, 0.3);
    ModelSpec model = quadratic_model();
    const Solution s = solve_planning(model, g, a.values, b.values, quick_config());
    const AprioriReport r = apriori_check(model, s);
    CHECK(r.finite);
    CHECK(r.energy_ok);
    CHECK(r.holder_ok);
    CHECK(r.moment_ok);
    CHECK(r.momentum_norm <= r.holder_rhs * (1.0 + 1e-12));
  }

  TEST_CASE("velocity is masked where the density vanishes") {
    GridSpec g{1, 2, 4, 1.0};
    DensityField m(g);
    for (int k = 0; k <= 2; ++k) m.at(k, 1) = 1.0;
    MomentumField w(g);
    const VelocityField v = recover_velocity(m, w, 1e-8);
    CHECK(v.mask[0] == 0);
    CHECK(v.mask[1] == 1);
    CHECK_THROWS_AS(recover_velocity(m, w, -1.0), Error);
  }

  TEST_CASE("operator norm estimate is deterministic and positive") {
    GridSpec g{1, 8, 8, 1.0};
    const double a = estimate_lift_norm(g, 30), b = estimate_lift_norm(g, 30);
    CHECK(a == b);
    CHECK(a > 0.0);
  }
}

TEST_SUITE("dual") {
  TEST_CASE("zero multiplier gives the endpoint constant") {
    GridSpec g{1, 4, 6, 1.0};
    const Density a = gaussian_density(g, {-0.2, 0}, 0.3), b = gaussian_density(g, {0.2, 0}, 0.3);
    const ModelSpec model = quadratic_model();
    CellField u(g);
    SliceField alpha(g);
    double ends = 0.0;
    for (std::size_t c = 0; c < g.cells(); ++c) {
      ends += 0.5 * (0.5 * a.values[c] * a.values[c] + 0.5 * b.values[c] * b.values[c]);
    }
    CHECK(dual_energy(model, u, alpha, a.values, b.values) ==
          doctest::Approx(g.spacetime_volume() * ends).epsilon(1e-14));
  }

  TEST_CASE("hj value of a time-linear multiplier") {
    GridSpec g{2, 5, 4, 1.0};
    ModelSpec model = quadratic_model();
    model.V_H = 0.3;
    CellField u(g);
    for (int k = 0; k < g.nt; ++k) for (std::size_t c = 0; c < g.cells(); ++c) u.at(k, c) = 2.0 * (k + 0.5) * g.dt();
    const SliceField hj = hj_value(DiscreteModel(model, g), u);
    for (int k = 1; k < g.nt; ++k) for (std::size_t c = 0; c < g.cells(); ++c) CHECK(hj.at(k, c) == doctest::Approx(-2.3));
  }

  TEST_CASE("weak duality and the defect identity on random pairs") {
    std::mt19937_64 rng(41);
    std::normal_distribution<double> n01(0.0, 1.0);
    for (int d : {1, 2}) {
      GridSpec g{d, 6, d == 1 ? 16 : 8, 1.5};
      ModelSpec model = quadratic_model(0.7);
      model.z[0] = 0.2;
      model.V_H = 0.1;
      model.V_f = -0.05;
      const DiscreteModel dm(model, g);
      for (int trial = 0; trial < 10; ++trial) {
        const Density a = random_mixture(g, 100 + trial, 0.05), b = random_mixture(g, 200 + trial, 0.05);
        const FlowPair f = initialize_flow(InitStrategy::kLinearBlend, g, a.values, b.values);
        CellField u(g);
        for (double& v : u.values()) v = n01(rng);
        const DualPair pair = recover_dual(dm, f.m, u);
        const DiagnosticsReport r = duality_report(dm, f.m, f.w, pair.u, pair.alpha, 1e-12);
        CHECK(r.gap >= -1e-12);
        CHECK(r.identity_error < 1e-10);
        CHECK(r.yh_integral >= -1e-14);
        CHECK(r.yf_integral >= -1e-14);
        CHECK(r.hj_violation == 0.0);
        CHECK(r.min_alpha_slack >= 0.0);
      }
    }
  }

  TEST_CASE("gauge: u is normalised against the final density") {
    GridSpec g{1, 4, 8, 1.0};
    const Density a = gaussian_density(g, {-0.2, 0}, 0.3), b = gaussian_density(g, {0.2, 0}, 0.3);
    const FlowPair f = initialize_flow(InitStrategy::kLinearBlend, g, a.values, b.values);
    CellField u(g, 3.0);
    const DualPair p = recover_dual(DiscreteModel(quadratic_model(), g), f.m, u);
    double s = 0.0;
    for (std::size_t c = 0; c < g.cells(); ++c) s += p.u.at(g.nt - 1, c) * b.values[c];
    CHECK(std::abs(s) < 1e-12);
  }

  TEST_CASE("clamp_alpha lifts alpha to f(x,0)") {
    GridSpec g{1, 2, 4, 1.0};
    ModelSpec model = quadratic_model();
    model.V_f = 0.4;
    SliceField alpha(g, -1.0);
    const SliceField c = clamp_alpha(DiscreteModel(model, g), alpha);
    for (double v : c.values()) CHECK(v == 0.4);
  }
}
