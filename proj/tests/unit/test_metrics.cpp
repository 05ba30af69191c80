#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mfplan/densities.hpp"
#include "mfplan/error.hpp"
#include "mfplan/metrics.hpp"

using namespace mfplan;

namespace {

// Reference W2 by sampling both quantile functions on a fine uniform level grid.
double sampled_w2(const Density& a, const Density& b, int n = 200000) {
  const QuantileFunction qa = quantile_function(a), qb = quantile_function(b);
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double l = (i + 0.5) / n;
    const double d = qa(l) - qb(l);
    s += d * d / n;
  }
  return std::sqrt(s);
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("translated uniform blocks are at distance equal to the shift") {
    GridSpec g{1, 4, 40, 2.0};
    const Density a = box_density(g, {-1.0, 0}, {0.0, 0}), b = box_density(g, {0.0, 0}, {1.0, 0});
    CHECK(w2_1d(a, b) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(w1_1d(a, b) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(w2_1d(a, a) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
  }

  TEST_CASE("closed-form integration agrees with dense level sampling") {
    GridSpec g{1, 4, 50, 2.0};
    for (int s = 0; s < 5; ++s) {
      const Density a = random_mixture(g, 10 + s), b = random_mixture(g, 20 + s);
      CHECK(w2_1d(a, b) == doctest::Approx(sampled_w2(a, b)).epsilon(1e-6));
    }
  }

  TEST_CASE("gaussians: distance equals the mean shift") {
    GridSpec g{1, 4, 400, 3.0};
    const Density a = gaussian_density(g, {-0.3, 0}, 0.25), b = gaussian_density(g, {0.4, 0}, 0.25);
    CHECK(w2_1d(a, b) == doctest::Approx(0.7).epsilon(1e-6));
  }

  TEST_CASE("empty cells are skipped by the quantile function") {
    GridSpec g{1, 4, 4, 2.0};  // cells [-2,-1],[-1,0],[0,1],[1,2]
    const Density m{g, {1.0, 0.0, 0.0, 1.0}};
    const QuantileFunction q = quantile_function(m);
    CHECK(q(0.25) == doctest::Approx(-1.5));
    CHECK(q(0.75) == doctest::Approx(1.5));
    CHECK(q(0.0) == doctest::Approx(-2.0));
    CHECK(q(1.0) == doctest::Approx(2.0));
  }

  TEST_CASE("displacement interpolation moves a block rigidly") {
    GridSpec g{1, 4, 40, 2.0};
    const Density a = box_density(g, {-1.5, 0}, {-0.5, 0}), b = box_density(g, {0.5, 0}, {1.5, 0});
    const Density mid = displacement_interpolation_1d(a, b, 0.5);
    const Density expect = box_density(g, {-0.5, 0}, {0.5, 0});
    for (std::size_t c = 0; c < g.cells(); ++c) CHECK(mid.values[c] == doctest::Approx(expect.values[c]).epsilon(1e-12));
    CHECK(mid.mass() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(w2_1d(a, mid) == doctest::Approx(0.5 * w2_1d(a, b)).epsilon(1e-12));
  }

  TEST_CASE("geodesic property and convexity along the interpolant") {
    GridSpec g{1, 4, 64, 2.0};
    for (int s = 0; s < 10; ++s) {
      const Density a = random_mixture(g, 300 + s), b = random_mixture(g, 400 + s);
      const double w = w2_1d(a, b);
      const double m0 = displacement_second_moment_1d(a, b, 0.0), m1 = displacement_second_moment_1d(a, b, 1.0);
      const double l0 = displacement_lp_power_1d(a, b, 0.0, 2.0), l1 = displacement_lp_power_1d(a, b, 1.0, 2.0);
      CHECK(l0 == doctest::Approx(std::pow(slice_norms(g, a.values, 2.0).lp, 2.0)).epsilon(1e-12));
      for (double t : {0.25, 0.5, 0.75}) {
        CHECK(displacement_second_moment_1d(a, b, t) <= (1 - t) * m0 + t * m1 + 1e-12);
        CHECK(displacement_lp_power_1d(a, b, t, 2.0) <= (1 - t) * l0 + t * l1 + 1e-12);
        const Density mt = displacement_interpolation_1d(a, b, t);
        CHECK(std::pow(slice_norms(g, mt.values, 2.0).lp, 2.0) <= displacement_lp_power_1d(a, b, t, 2.0) + 1e-12);
        CHECK(w2_1d(a, mt) == doctest::Approx(t * w).epsilon(0.02));
      }
    }
  }

  TEST_CASE("w1 against samples converges like n^-1/2") {
    GridSpec g{1, 4, 64, 2.0};
    const Density m = gaussian_density(g, {0.0, 0}, 0.4);
    const QuantileFunction q = quantile_function(m);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> errs;
    for (int n : {100, 10000}) {
      std::vector<double> xs(n);
      for (double& x : xs) x = q(u(rng));
      errs.push_back(w1_1d_samples(xs, m));
    }
    CHECK(errs[1] < errs[0]);
    CHECK(errs[1] < 0.02);
    std::vector<double> exact{q(0.5)};
    CHECK(w1_1d_samples(exact, m) > 0.0);
  }

  TEST_CASE("2-d requests are unsupported") {
    GridSpec g{2, 4, 8, 1.0};
    const Density a = gaussian_density(g, {0, 0}, 0.3);
    try {
      w2_1d(a, a);
      FAIL("expected unsupported");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kUnsupported);
    }
  }

  TEST_CASE("heat connector conserves mass and composes") {
    for (int d : {1, 2}) {
      GridSpec g{d, 4, d == 1 ? 128 : 32, 2.0};
      const Density m = random_mixture(g, 7);
      const Density a = heat_connector(m, 0.01);
      CHECK(a.mass() == doctest::Approx(m.mass()).epsilon(1e-12));
      for (double v : a.values) CHECK(v >= 0.0);
      const Density ab = heat_connector(a, 0.02), c = heat_connector(m, 0.03);
      double diff = 0.0, scale = 0.0;
      for (std::size_t i = 0; i < c.values.size(); ++i) {
        diff += std::abs(ab.values[i] - c.values[i]);
        scale += c.values[i];
      }
      CHECK(diff / scale < 0.02);
    }
    GridSpec g{1, 4, 16, 1.0};
    CHECK_THROWS_AS(heat_connector(Density{g, std::vector<double>(16, 1.0)}, 0.0), Error);
  }

  TEST_CASE("heat kernel matches the free gaussian away from the walls") {
    GridSpec g{1, 4, 801, 4.0};
    std::vector<double> spike(801, 0.0);
    spike[400] = 1.0 / g.dx();
    const Density s = heat_connector(Density{g, spike}, 0.05);
    for (int j : {380, 400, 430}) {
      const double x = g.center(j);
      const double exact = std::exp(-x * x / 0.2) / std::sqrt(4 * std::numbers::pi * 0.05);
      CHECK(s.values[j] == doctest::Approx(exact).epsilon(2e-3));
    }
  }

  TEST_CASE("fisher information of a sampled gaussian") {
    GridSpec g{1, 4, 2000, 3.0};
    const Density m = gaussian_density(g, {0, 0}, 0.3);
    CHECK(fisher_information(m) == doctest::Approx(1.0 / 0.09).epsilon(1e-3));
  }

  TEST_CASE("kl model has the advertised structure") {
    const ModelSpec m = kl_model(2.0, 3.0);
    const PointModel c = at(m, {0, 0});
    CHECK(hamiltonian(c, {1.0, 0.0}) == doctest::Approx(0.25));
    CHECK(F_value(c, 2.0) == doctest::Approx((2.0 + 8.0) / 4.0));
    CHECK_THROWS_AS(kl_model(0.0, 2.0), Error);
  }

  TEST_CASE("kl upper bound by hand") {
    GridSpec g{1, 4, 2, 1.0};  // centres -0.5, 0.5; dx = 1
    const Density a{g, {1.0, 0.0}}, b{g, {0.0, 1.0}};
    const double expect = 1.0 / 4.0 + (2.0 * 0.25 * 2.0 + (1.0 + 1.0) / 8.0);
    CHECK(kl_upper_bound(a, b, 2.0, 2.0) == doctest::Approx(expect));
  }

  TEST_CASE("kl cost on a stationary pair is bounded by the stationary path") {
    GridSpec g{1, 8, 16, 1.0};
    const Density m = gaussian_density(g, {0, 0}, 0.4);
    SolverConfig c;
    c.max_iters = 500;
    for (double a : {0.5, 1.0, 2.0}) {
      const KlCost k = kl_cost(m, m, a, 2.0, c);
      const double lp = std::pow(slice_norms(g, m.values, 2.0).lp, 2.0);
      CHECK(k.cost <= (1.0 + lp) / (2.0 * a) + 1e-9);
    }
    const KlDistance single = kl_distance(m, m, {1.0}, 2.0, c);
    CHECK(single.value == kl_cost(m, m, 1.0, 2.0, c).cost);
    CHECK(single.argmin_a == 1.0);
  }
}

TEST_SUITE("densities") {
  TEST_CASE("unit mass and nonnegativity") {
    GridSpec g1{1, 4, 128, 2.0}, g2{2, 4, 32, 2.0};
    CHECK(gaussian_density(g1, {0, 0}, 0.2).mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(box_density(g1, {-0.3, 0}, {0.7, 0}).mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ring_density(g2, 1.0, 0.2).mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(bimodal_density(g2, {-1, -1}, {1, 1}, 0.2).mass() == doctest::Approx(1.0).epsilon(1e-12));
    for (double v : ring_density(g2, 1.0, 0.2).values) CHECK(v >= 0.0);
  }

  TEST_CASE("bimodal halves carry half the mass each") {
    GridSpec g{1, 4, 128, 2.0};
    const Density m = bimodal_density(g, {-1.0, 0}, {1.0, 0}, 0.2, 0.5);
    double left = 0.0;
    for (int j = 0; j < 64; ++j) left += m.values[j] * g.dx();
    CHECK(left == doctest::Approx(0.5).epsilon(1e-9));
  }

  TEST_CASE("seeded generation is deterministic") {
    GridSpec g{1, 4, 64, 2.0};
    Density a = box_density(g, {-1, 0}, {1, 0}), b = a;
    jitter_density(a, 0.1, 9);
    jitter_density(b, 0.1, 9);
    CHECK(a.values == b.values);
    CHECK(random_mixture(g, 3).values == random_mixture(g, 3).values);
  }

  TEST_CASE("invalid parameters are domain errors") {
    GridSpec g{1, 4, 16, 1.0};
    CHECK_THROWS_AS(gaussian_density(g, {0, 0}, -1.0), Error);
    CHECK_THROWS_AS(box_density(g, {5, 0}, {6, 0}), Error);  // outside the box: no mass
    CHECK_THROWS_AS(ring_density(g, 1.0, 0.1), Error);
  }
}
