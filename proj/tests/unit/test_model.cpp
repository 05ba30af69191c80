#include <doctest.h>

#include <cmath>
#include <random>

#include "mfplan/error.hpp"
#include "mfplan/model.hpp"

using namespace mfplan;

namespace {

PointModel sample_model(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  PointModel c;
  c.p = 1.5 + std::abs(u(rng)) * 2.0;
  c.g = 0.5 + std::abs(u(rng)) * 2.0;
  c.z = {u(rng), u(rng)};
  c.V_H = u(rng);
  c.a = 0.3 + std::abs(u(rng));
  c.V_f = u(rng);
  return c;
}

// Brute-force sup over p of -v.p - H(p) on a shrinking lattice.
double numeric_lagrangian(const PointModel& c, const Vec& v) {
  Vec best{0.0, 0.0};
  double best_val = -1e300;
  double span = 50.0;
  for (int round = 0; round < 40; ++round) {
    const Vec centre = best;
    for (int i = -10; i <= 10; ++i) {
      for (int j = -10; j <= 10; ++j) {
        const Vec p{centre[0] + span * i / 10.0, centre[1] + span * j / 10.0};
        const double val = -(v[0] * p[0] + v[1] * p[1]) - hamiltonian(c, p);
        if (val > best_val) {
          best_val = val;
          best = p;
        }
      }
    }
    span *= 0.5;
  }
  return best_val;
}

// Brute-force sup over m >= 0 of alpha m - F(m).
double numeric_fstar(const PointModel& c, double alpha) {
  double lo = 0.0, hi = 1.0;
  while (alpha * hi - F_value(c, hi) > alpha * (hi / 2) - F_value(c, hi / 2) && hi < 1e8) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double a = lo + (hi - lo) / 3.0, b = hi - (hi - lo) / 3.0;
    if (alpha * a - F_value(c, a) < alpha * b - F_value(c, b)) lo = a; else hi = b;
  }
  const double m = 0.5 * (lo + hi);
  return std::max(0.0, alpha * m - F_value(c, m));
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("lagrangian is the conjugate of the hamiltonian") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int s = 0; s < 20; ++s) {
      const PointModel c = sample_model(rng);
      const Vec v{u(rng), u(rng)};
      CHECK(lagrangian(c, v) == doctest::Approx(numeric_lagrangian(c, v)).epsilon(1e-8));
    }
  }

  TEST_CASE("fenchel-young inequality with equality on the graph") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int s = 0; s < 200; ++s) {
      const PointModel c = sample_model(rng);
      const Vec p{u(rng), u(rng)}, v{u(rng), u(rng)};
      CHECK(gap_YH(c, p, v) >= 0.0);
      CHECK(hamiltonian(c, p) + lagrangian(c, v) + v[0] * p[0] + v[1] * p[1] >= -1e-12);
      const Vec hp = hamiltonian_grad_p(c, p);
      const Vec vstar{-hp[0], -hp[1]};
      CHECK(gap_YH(c, p, vstar) == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(hamiltonian(c, p) + lagrangian(c, vstar) + vstar[0] * p[0] + vstar[1] * p[1] ==
            doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
    }
  }

  TEST_CASE("gradient of H matches central differences") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int s = 0; s < 50; ++s) {
      const PointModel c = sample_model(rng);
      const Vec p{u(rng), u(rng)};
      const Vec gd = hamiltonian_grad_p(c, p);
      const double h = 1e-6;
      for (int a = 0; a < 2; ++a) {
        Vec pp = p, pm = p;
        pp[a] += h;
        pm[a] -= h;
        const double fd = (hamiltonian(c, pp) - hamiltonian(c, pm)) / (2 * h);
        CHECK(gd[a] == doctest::Approx(fd).epsilon(1e-6));
      }
    }
  }

  TEST_CASE("f is the derivative of F") {
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> u(0.05, 3.0);
    for (int s = 0; s < 50; ++s) {
      const PointModel c = sample_model(rng);
      const double m = u(rng), h = 1e-6;
      const double fd = (F_value(c, m + h) - F_value(c, m - h)) / (2 * h);
      CHECK(coupling_f(c, m) == doctest::Approx(fd).epsilon(1e-6));
    }
  }

  TEST_CASE("F* matches a numeric supremum and vanishes exactly below V_f") {
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> u(-2.0, 4.0);
    for (int s = 0; s < 50; ++s) {
      const PointModel c = sample_model(rng);
      const double alpha = u(rng);
      CHECK(F_star_value(c, alpha) == doctest::Approx(numeric_fstar(c, alpha)).epsilon(1e-7));
      CHECK(F_star_value(c, c.V_f - std::abs(alpha)) == 0.0);
      CHECK(F_star_value(c, c.V_f + 0.1 + std::abs(alpha)) > 0.0);
      const double m = std::abs(alpha);
      CHECK(gap_YF(c, m, coupling_f(c, m)) == doctest::Approx(0.0).epsilon(1e-10));
      CHECK(gap_YF(c, m, alpha) >= 0.0);
    }
  }

  TEST_CASE("perspective is m L(w/m) with the vacuum conventions") {
    PointModel c;
    c.g = 2.0;
    c.z = {0.5, 0.0};
    c.V_H = 0.25;
    CHECK(perspective_L(c, 0.0, {0.0, 0.0}) == 0.0);
    CHECK(std::isinf(perspective_L(c, 0.0, {1.0, 0.0})));
    CHECK_THROWS_AS(perspective_L(c, -1.0, {0.0, 0.0}), Error);
    CHECK(perspective_L(c, 2.0, {1.0, 0.0}) == doctest::Approx(2.0 * lagrangian(c, {0.5, 0.0})));
  }

  TEST_CASE("negative density is a domain error") {
    PointModel c;
    try {
      F_value(c, -1e-3);
      FAIL("expected an exception");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kDomain);
    }
  }

  TEST_CASE("growth check accepts the quadratic model and flags a bad constant") {
    ModelSpec m;
    m.p = 2.0;
    const std::vector<Vec> xs{{0.0, 0.0}, {1.0, -1.0}, {-1.5, 0.5}};
    CHECK(growth_check(m, xs, 2).ok);
    m.c_f = 0.5;  // a = 1 lies outside [c_f^-p, c_f^p]
    const GrowthReport r = growth_check(m, xs, 2);
    CHECK_FALSE(r.ok);
    REQUIRE(r.first_violation.has_value());
    CHECK(r.first_violation->bound == "a_range");
    CHECK_THROWS_AS(require_growth(m, xs, 2), Error);
  }

  TEST_CASE("sampled coefficients interpolate between cell centres") {
    GridSpec g{1, 4, 4, 2.0};
    const SpatialFunction f = SpatialFunction::sampled(g, {0.0, 1.0, 2.0, 3.0});
    CHECK(f({g.center(1), 0.0}) == doctest::Approx(1.0));
    CHECK(f({0.5 * (g.center(1) + g.center(2)), 0.0}) == doctest::Approx(1.5));
    CHECK(f({-5.0, 0.0}) == doctest::Approx(0.0));
    CHECK(f({5.0, 0.0}) == doctest::Approx(3.0));
    CHECK(f.min() == 0.0);
    CHECK(f.max() == 3.0);
  }

  TEST_CASE("validation rejects p <= 1 and nonpositive g") {
    ModelSpec m;
    m.p = 1.0;
    CHECK_THROWS_AS(m.validate(), Error);
    m.p = 2.0;
    m.g = -1.0;
    CHECK_THROWS_AS(m.validate(), Error);
  }
}
