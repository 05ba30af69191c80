#include <doctest.h>

#include <cmath>
#include <random>

#include "mfplan/densities.hpp"
#include "mfplan/error.hpp"
#include "mfplan/grid.hpp"
#include "mfplan/poisson.hpp"
#include "mfplan/primal.hpp"

using namespace mfplan;

namespace {

void randomize(std::vector<double>& v, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& x : v) x = u(rng);
}

double inner(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST_SUITE("poisson") {
  TEST_CASE("solve inverts apply on mean-free data") {
    for (const auto& dims : {std::vector<int>{17}, std::vector<int>{6, 9}, std::vector<int>{4, 5, 7}}) {
      std::vector<double> h(dims.size());
      for (std::size_t a = 0; a < h.size(); ++a) h[a] = 0.1 + 0.05 * a;
      NeumannPoisson P(dims, h);
      std::mt19937_64 rng(31);
      std::vector<double> rhs(P.size());
      randomize(rhs, rng);
      double mean = 0.0;
      for (double v : rhs) mean += v / rhs.size();
      std::vector<double> phi = rhs, back(P.size());
      const double removed = P.solve(phi);
      CHECK(removed == doctest::Approx(mean).epsilon(1e-12));
      P.apply(phi, back);
      for (std::size_t i = 0; i < rhs.size(); ++i) CHECK(back[i] == doctest::Approx(rhs[i] - mean).epsilon(1e-9));
    }
  }

  TEST_CASE("apply matches the five-point stencil with reflecting ghosts") {
    NeumannPoisson P({3, 4}, {0.5, 0.25});
    std::vector<double> phi(12), out(12);
    std::mt19937_64 rng(32);
    randomize(phi, rng);
    P.apply(phi, out);
    auto at = [&](int i, int j) {
      i = std::clamp(i, 0, 2);
      j = std::clamp(j, 0, 3);
      return phi[i * 4 + j];
    };
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 4; ++j) {
        const double lap = -(at(i + 1, j) - 2 * at(i, j) + at(i - 1, j)) / 0.25 -
                           (at(i, j + 1) - 2 * at(i, j) + at(i, j - 1)) / 0.0625;
        CHECK(out[i * 4 + j] == doctest::Approx(lap).epsilon(1e-10));
      }
    }
  }
}

TEST_SUITE("grid") {
  TEST_CASE("geometry") {
    GridSpec g{2, 4, 8, 2.0};
    CHECK(g.dx() == 0.5);
    CHECK(g.cells() == 64);
    CHECK(g.faces(0) == 72);
    CHECK(g.cell_volume() == 0.25);
    const auto c = g.cell_center(g.flat_cell({1, 2}));
    CHECK(c[0] == doctest::Approx(-1.25));
    CHECK(c[1] == doctest::Approx(-0.75));
    CHECK_THROWS_AS((GridSpec{3, 4, 4, 1.0}.validate()), Error);
    CHECK_THROWS_AS((GridSpec{1, 0, 4, 1.0}.validate()), Error);
  }

  TEST_CASE("continuity residual of a hand-built flow") {
    GridSpec g{1, 2, 2, 1.0};
    DensityField m(g);
    MomentumField w(g);
    // Mass moves from the left cell to the right cell through the middle face.
    m.at(0, 0) = 1.0;
    m.at(1, 0) = 0.5;
    m.at(1, 1) = 0.5;
    m.at(2, 1) = 1.0;
    w.step(0, 0)[1] = 0.5 * g.dx() / g.dt();
    w.step(0, 1)[1] = 0.5 * g.dx() / g.dt();
    const CellField r = continuity_residual(m, w);
    CHECK(max_abs(r.values()) < 1e-14);
  }

  TEST_CASE("projection is feasible, idempotent and orthogonal") {
    for (int d : {1, 2}) {
      GridSpec g{d, 6, 8, 1.5};
      std::mt19937_64 rng(33 + d);
      const Density m0 = random_mixture(g, 1), m1 = random_mixture(g, 2);
      DensityField m(g);
      MomentumField w(g);
      randomize(m.values(), rng);
      for (int a = 0; a < d; ++a) randomize(w.component(a), rng);
      w.enforce_no_flux();
      ContinuityProjector P(g);
      DensityField pm = m;
      MomentumField pw = w;
      P.project(pm, pw, m0.values, m1.values);
      CHECK(max_abs(continuity_residual(pm, pw).values()) < 1e-10);
      for (std::size_t c = 0; c < g.cells(); ++c) {
        CHECK(pm.at(0, c) == m0.values[c]);
        CHECK(pm.at(g.nt, c) == m1.values[c]);
      }
      DensityField qm = pm;
      MomentumField qw = pw;
      P.project(qm, qw, m0.values, m1.values);
      for (std::size_t i = 0; i < qm.values().size(); ++i) CHECK(qm.values()[i] == doctest::Approx(pm.values()[i]).epsilon(1e-12));
      // The correction x - Px on free unknowns is in the range of A^T, hence
      // orthogonal to feasible directions (differences of feasible points).
      const FlowPair other = initialize_flow(InitStrategy::kLinearBlend, g, m0.values, m1.values);
      double dot = 0.0;
      for (int k = 1; k < g.nt; ++k) {
        for (std::size_t c = 0; c < g.cells(); ++c) {
          dot += (m.at(k, c) - pm.at(k, c)) * (other.m.at(k, c) - pm.at(k, c));
        }
      }
      for (int a = 0; a < d; ++a) {
        for (std::size_t i = 0; i < w.component(a).size(); ++i) {
          dot += (w.component(a)[i] - pw.component(a)[i]) * (other.w.component(a)[i] - pw.component(a)[i]);
        }
      }
      CHECK(std::abs(dot) < 1e-9);
    }
  }

  TEST_CASE("adjoint pairing of the continuity operator") {
    GridSpec g{2, 5, 6, 1.0};
    ContinuityProjector P(g);
    std::mt19937_64 rng(34);
    DensityField m(g);
    MomentumField w(g);
    randomize(m.values(), rng);
    for (int a = 0; a < 2; ++a) randomize(w.component(a), rng);
    for (std::size_t c = 0; c < g.cells(); ++c) {
      m.at(0, c) = 0.0;
      m.at(g.nt, c) = 0.0;
    }
    w.enforce_no_flux();
    CellField phi(g);
    randomize(phi.values(), rng);
    const CellField Ax = P.apply(m, w);
    DensityField tm(g);
    MomentumField tw(g);
    P.apply_transpose(phi, tm, tw);
    double lhs = inner(Ax.values(), phi.values());
    double rhs = 0.0;
    for (int k = 1; k < g.nt; ++k) {
      for (std::size_t c = 0; c < g.cells(); ++c) rhs += m.at(k, c) * tm.at(k, c);
    }
    for (int a = 0; a < 2; ++a) rhs += inner(w.component(a), tw.component(a));
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-11));
  }

  TEST_CASE("momentum_for closes the continuity equation") {
    GridSpec g{2, 4, 10, 1.0};
    const Density a = gaussian_density(g, {-0.3, 0.2}, 0.3), b = gaussian_density(g, {0.3, -0.1}, 0.25);
    DensityField m(g);
    for (int k = 0; k <= g.nt; ++k) {
      const double t = k * g.dt();
      for (std::size_t c = 0; c < g.cells(); ++c) m.at(k, c) = (1 - t) * a.values[c] + t * b.values[c];
    }
    const MomentumField w = momentum_for(m);
    CHECK(max_abs(continuity_residual(m, w).values()) < 1e-11);
    DensityField bad = m;
    bad.at(2, 0) += 1.0;
    CHECK_THROWS_AS(momentum_for(bad), Error);
  }

  TEST_CASE("endpoints with different mass are infeasible") {
    GridSpec g{1, 4, 8, 1.0};
    std::vector<double> m0(8, 0.5), m1(8, 0.6);
    DensityField m(g);
    MomentumField w(g);
    ContinuityProjector P(g);
    try {
      P.project(m, w, m0, m1);
      FAIL("expected infeasible endpoints");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kInfeasibleEndpoints);
    }
  }

  TEST_CASE("face/centre transfers are adjoint") {
    GridSpec g{2, 3, 5, 1.0};
    std::mt19937_64 rng(35);
    MomentumField w(g);
    for (int a = 0; a < 2; ++a) randomize(w.component(a), rng);
    w.enforce_no_flux();
    std::vector<std::vector<double>> c(2, std::vector<double>(g.nt * g.cells()));
    for (auto& v : c) randomize(v, rng);
    const auto fc = interp_face_to_center(w);
    const MomentumField cf = interp_center_to_face(g, c);
    double lhs = 0.0, rhs = 0.0;
    for (int a = 0; a < 2; ++a) {
      lhs += inner(fc[a], c[a]);
      rhs += inner(w.component(a), cf.component(a));
    }
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }

  TEST_CASE("slice norms of a uniform density") {
    GridSpec g{1, 2, 10, 1.0};
    std::vector<double> m(10, 0.5);
    const SliceNorms n = slice_norms(g, m, 2.0);
    CHECK(n.mass == doctest::Approx(1.0));
    CHECK(n.lp == doctest::Approx(std::sqrt(0.5)));
    CHECK(n.boundary_mass == doctest::Approx(0.2));
    // sum over cell centres of x^2 * 0.5 * dx
    double q = 0.0;
    for (int j = 0; j < 10; ++j) q += g.center(j) * g.center(j) * 0.5 * g.dx();
    CHECK(n.quadratic_moment == doctest::Approx(q));
    CHECK(n.l1_kappa == doctest::Approx(1.0 + q));
  }
}
