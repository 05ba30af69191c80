#include "mfplan/prox.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "mfplan/error.hpp"

namespace mfplan {

namespace {

constexpr int kMaxIterations = 100;

[[noreturn]] void no_convergence(const char* what, double m_tilde, double tau, const Vec& w_tilde = {}) {
  std::ostringstream os;
  os.precision(17);
  os << what << ": Newton iteration did not converge (m~=" << m_tilde << ", w~=(" << w_tilde[0]
     << ", " << w_tilde[1] << "), tau=" << tau << ")";
  fail(ErrorCode::kNumerical, os.str());
}

// Root of an increasing function on (0, inf) by Newton's method kept inside a
// shrinking bracket. `eval(m, &slope)` returns the value. Requires eval(0+) < 0.
// `atol` is the absolute resolution of the root implied by roundoff in eval.
template <class Eval>
double increasing_root(Eval eval, double guess, double atol, const char* what, double m_tilde,
                       const Vec& w_tilde, double tau, int* iterations) {
  double lo = 0.0;
  double hi = std::max(1.0, 2.0 * std::abs(guess));
  double slope = 0.0;
  for (int k = 0; eval(hi, &slope) <= 0.0; ++k) {
    lo = hi;
    hi *= 2.0;
    if (k > 2000 || !std::isfinite(hi)) no_convergence(what, m_tilde, tau, w_tilde);
  }
  double m = (guess > lo && guess < hi) ? guess : 0.5 * (lo + hi);
  for (int it = 1; it <= kMaxIterations; ++it) {
    const double g = eval(m, &slope);
    if (g == 0.0) {
      *iterations = it;
      return m;
    }
    if (g < 0.0) lo = m; else hi = m;
    const bool newton = slope > 0.0 && std::isfinite(slope);
    if (newton && std::abs(g / slope) <= 4.0 * std::numeric_limits<double>::epsilon() * m + atol) {
      *iterations = it;
      return m;
    }
    double next = newton ? m - g / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - m);
    m = next;
    if (step <= 4.0 * std::numeric_limits<double>::epsilon() * m ||
        hi - lo <= std::max(4.0 * std::numeric_limits<double>::epsilon() * hi, atol)) {
      *iterations = it;
      return m;
    }
  }
  no_convergence(what, m_tilde, tau, w_tilde);
}

// Shared solver for |w + z m|^2/(2 g m) + phi(m) + (|m-m~|^2 + |w-w~|^2)/(2 tau).
// `dphi(m, &second)` returns phi'(m) and its derivative.
template <class DPhi>
ProxResult perspective_prox(const PointModel& c, double m_tilde, const Vec& w_tilde, double tau,
                            DPhi dphi, const char* what) {
  require(tau > 0.0 && std::isfinite(tau), ErrorCode::kInvalidArgument, "prox: tau must be > 0");
  const double g = c.g;
  const Vec& z = c.z;
  auto reduced_slope = [&](double m, double* second) {
    const double denom = g * m + tau;
    const Vec s{g * (w_tilde[0] + z[0] * m) / denom, g * (w_tilde[1] + z[1] * m) / denom};
    const Vec ds{g * (z[0] * tau - g * w_tilde[0]) / (denom * denom),
                 g * (z[1] * tau - g * w_tilde[1]) / (denom * denom)};
    double phi2 = 0.0;
    const double phi1 = dphi(m, &phi2);
    const double value = (m - m_tilde) / tau + phi1 + (z[0] * s[0] + z[1] * s[1]) / g -
                         (s[0] * s[0] + s[1] * s[1]) / (2.0 * g);
    *second = 1.0 / tau + phi2 + ((z[0] - s[0]) * ds[0] + (z[1] - s[1]) * ds[1]) / g;
    return value;
  };
  double unused = 0.0;
  ProxResult r;
  const double slope0 = reduced_slope(0.0, &unused);
  if (slope0 >= 0.0) return r;
  double phi2 = 0.0;
  const double phi0 = dphi(0.0, &phi2);
  const Vec s0{w_tilde[0] / tau * g, w_tilde[1] / tau * g};
  const double terms = std::abs(phi0) + (std::abs(z[0] * s0[0]) + std::abs(z[1] * s0[1])) / g +
                       (s0[0] * s0[0] + s0[1] * s0[1]) / (2.0 * g);
  const double atol =
      4.0 * std::numeric_limits<double>::epsilon() * (std::abs(m_tilde) + tau * terms);
  r.m = increasing_root(reduced_slope, m_tilde, atol, what, m_tilde, w_tilde, tau, &r.iterations);
  const double denom = tau + g * r.m;
  r.w = {r.m * (g * w_tilde[0] - tau * z[0]) / denom, r.m * (g * w_tilde[1] - tau * z[1]) / denom};
  return r;
}

}  // namespace

ProxResult prox_action(const PointModel& c, double m_tilde, const Vec& w_tilde, double tau) {
  const double p = c.p;
  auto dphi = [&](double m, double* second) {
    if (m <= 0.0) {
      *second = 0.0;
      return c.V_f + c.V_H;
    }
    const double mp2 = std::pow(m, p - 2.0);
    *second = c.a * (p - 1.0) * mp2;
    return c.a * mp2 * m + c.V_f + c.V_H;
  };
  return perspective_prox(c, m_tilde, w_tilde, tau, dphi, "prox_action");
}

ProxResult prox_kinetic(const PointModel& c, double m_tilde, const Vec& w_tilde, double tau) {
  auto dphi = [](double, double* second) {
    *second = 0.0;
    return 0.0;
  };
  return perspective_prox(c, m_tilde, w_tilde, tau, dphi, "prox_kinetic");
}

double prox_coupling(const PointModel& c, double m_tilde, double tau) {
  const double shift = c.V_f + c.V_H;
  if (shift - m_tilde / tau >= 0.0) return 0.0;
  if (c.p == 2.0) return (m_tilde - tau * shift) / (1.0 + tau * c.a);
  const double p = c.p;
  auto eval = [&](double m, double* slope) {
    const double mp2 = std::pow(m, p - 2.0);
    *slope = 1.0 / tau + c.a * (p - 1.0) * mp2;
    return (m - m_tilde) / tau + c.a * mp2 * m + shift;
  };
  int iterations = 0;
  const double atol =
      4.0 * std::numeric_limits<double>::epsilon() * (std::abs(m_tilde) + tau * std::abs(shift));
  return increasing_root(eval, m_tilde, atol, "prox_coupling", m_tilde, {}, tau, &iterations);
}

double prox_action_residual(const PointModel& c, double m_tilde, const Vec& w_tilde, double tau,
                            const ProxResult& r) {
  const double g = c.g;
  if (r.m <= 0.0) {
    // Minimiser at the origin requires the one-sided slope at m = 0+ to be >= 0.
    const Vec s{w_tilde[0] / tau * g, w_tilde[1] / tau * g};
    const double slope = -m_tilde / tau + c.V_f + c.V_H + (c.z[0] * s[0] + c.z[1] * s[1]) / g -
                         (s[0] * s[0] + s[1] * s[1]) / (2.0 * g);
    return std::max({0.0, -slope, std::abs(r.w[0]), std::abs(r.w[1])});
  }
  const Vec s{(r.w[0] + c.z[0] * r.m) / r.m, (r.w[1] + c.z[1] * r.m) / r.m};
  const double dm = (c.z[0] * s[0] + c.z[1] * s[1]) / g - (s[0] * s[0] + s[1] * s[1]) / (2.0 * g) +
                    c.V_H + coupling_f(c, r.m) + (r.m - m_tilde) / tau;
  const double dw0 = s[0] / g + (r.w[0] - w_tilde[0]) / tau;
  const double dw1 = s[1] / g + (r.w[1] - w_tilde[1]) / tau;
  return std::max({std::abs(dm), std::abs(dw0), std::abs(dw1)});
}

}  // namespace mfplan
