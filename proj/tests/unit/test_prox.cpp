#include <doctest.h>

#include <cmath>
#include <random>

#include "mfplan/model.hpp"
#include "mfplan/prox.hpp"

using namespace mfplan;

namespace {

double action_objective(const PointModel& c, double mt, const Vec& wt, double tau, double m,
                        const Vec& w) {
  if (m < 0.0) return 1e300;
  const double pers = perspective_L(c, m, w);
  const double dm = m - mt, dw0 = w[0] - wt[0], dw1 = w[1] - wt[1];
  return pers + F_value(c, m) + (dm * dm + dw0 * dw0 + dw1 * dw1) / (2.0 * tau);
}

// For fixed m the w-subproblem is quadratic; minimise the reduced objective
// in m by golden section.
double reduced(const PointModel& c, double mt, const Vec& wt, double tau, double m, Vec& w) {
  if (m <= 0.0) {
    w = {0.0, 0.0};
    const double dm = m - mt;
    return F_value(c, 0.0) + (dm * dm + wt[0] * wt[0] + wt[1] * wt[1]) / (2.0 * tau);
  }
  // d/dw: (w + z m)/(g m) + (w - wt)/tau = 0
  for (int a = 0; a < 2; ++a) {
    w[a] = (wt[a] / tau - c.z[a] / c.g) / (1.0 / (c.g * m) + 1.0 / tau);
  }
  return action_objective(c, mt, wt, tau, m, w);
}

}  // namespace

TEST_SUITE("prox") {
  TEST_CASE("prox_action matches an independent one-dimensional minimisation") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int s = 0; s < 100; ++s) {
      PointModel c;
      c.p = 1.5 + std::abs(u(rng));
      c.g = 0.5 + std::abs(u(rng));
      c.z = {0.3 * u(rng), 0.3 * u(rng)};
      c.V_H = 0.2 * u(rng);
      c.a = 0.5 + std::abs(u(rng));
      c.V_f = 0.2 * u(rng);
      const double mt = u(rng), tau = 0.1 + std::abs(u(rng));
      const Vec wt{u(rng), u(rng)};
      const ProxResult r = prox_action(c, mt, wt, tau);
      CHECK(r.m >= 0.0);
      double lo = 0.0, hi = 10.0;
      Vec w{};
      for (int i = 0; i < 300; ++i) {
        const double a = lo + (hi - lo) / 3.0, b = hi - (hi - lo) / 3.0;
        Vec wa, wb;
        if (reduced(c, mt, wt, tau, a, wa) < reduced(c, mt, wt, tau, b, wb)) hi = b; else lo = a;
      }
      const double mo = 0.5 * (lo + hi);
      const double best = std::min(reduced(c, mt, wt, tau, mo, w), reduced(c, mt, wt, tau, 0.0, w));
      const double got = action_objective(c, mt, wt, tau, r.m, r.w);
      CHECK(got <= best + 1e-9);
      CHECK(got == doctest::Approx(best).epsilon(1e-8));
      CHECK(std::abs(prox_action_residual(c, mt, wt, tau, r)) < 1e-8);
    }
  }

  TEST_CASE("prox_kinetic drops the coupling terms") {
    PointModel c;
    c.a = 5.0;
    c.V_f = 3.0;
    c.V_H = 2.0;
    PointModel bare = c;
    bare.a = 1e-300;
    bare.V_f = 0.0;
    bare.V_H = 0.0;
    const ProxResult k = prox_kinetic(c, 0.7, {0.4, -0.1}, 0.5);
    const ProxResult b = prox_action(bare, 0.7, {0.4, -0.1}, 0.5);
    CHECK(k.m == doctest::Approx(b.m).epsilon(1e-9));
    CHECK(k.w[0] == doctest::Approx(b.w[0]).epsilon(1e-9));
  }

  TEST_CASE("zero momentum and negative target give the vacuum") {
    PointModel c;
    const ProxResult r = prox_action(c, -1.0, {0.0, 0.0}, 1.0);
    CHECK(r.m == 0.0);
    CHECK(r.w[0] == 0.0);
  }

  TEST_CASE("prox_coupling solves F'(m) + V_H + (m - m~)/tau = 0") {
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int s = 0; s < 100; ++s) {
      PointModel c;
      c.p = 1.2 + 2.0 * std::abs(u(rng));
      c.a = 0.2 + std::abs(u(rng));
      c.V_f = 0.5 * u(rng);
      c.V_H = 0.5 * u(rng);
      const double mt = u(rng), tau = 0.05 + std::abs(u(rng));
      const double m = prox_coupling(c, mt, tau);
      CHECK(m >= 0.0);
      if (m > 0.0) {
        CHECK(coupling_f(c, m) + c.V_H + (m - mt) / tau == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
      } else {
        CHECK(coupling_f(c, 0.0) + c.V_H - mt / tau >= -1e-12);
      }
    }
  }
}
