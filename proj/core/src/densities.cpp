#include "mfplan/densities.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "mfplan/error.hpp"

namespace mfplan {
namespace {

// Average over one cell of a unit-mass 1-d Gaussian.
double gauss_cell(const GridSpec& g, int j, double c, double sigma) {
  const double s = sigma * std::numbers::sqrt2;
  const double lo = g.face_coord(j), hi = g.face_coord(j + 1);
  return 0.5 * (std::erf((hi - c) / s) - std::erf((lo - c) / s)) / g.dx();
}

double box_cell(const GridSpec& g, int j, double lo, double hi) {
  const double a = std::max(lo, g.face_coord(j)), b = std::min(hi, g.face_coord(j + 1));
  return b > a ? (b - a) / g.dx() : 0.0;
}

template <class Axis>
Density separable(const GridSpec& g, Axis axis_value) {
  g.validate();
  Density m{g, std::vector<double>(g.cells(), 0.0)};
  for (std::size_t c = 0; c < g.cells(); ++c) {
    const auto idx = g.cell_index(c);
    double v = axis_value(0, idx[0]);
    if (g.d == 2) v *= axis_value(1, idx[1]);
    m.values[c] = v;
  }
  return m;
}

}  // namespace

void normalize_mass(Density& m, double mass) {
  const double cur = m.mass();
  require(cur > 0.0 && std::isfinite(cur), ErrorCode::kDomain, "density has no mass");
  for (double& v : m.values) v *= mass / cur;
}

Density gaussian_density(const GridSpec& g, const Vec& center, double sigma) {
  require(sigma > 0.0, ErrorCode::kDomain, "gaussian sigma must be > 0");
  Density m = separable(g, [&](int a, int j) { return gauss_cell(g, j, center[a], sigma); });
  normalize_mass(m);
  return m;
}

Density box_density(const GridSpec& g, const Vec& lo, const Vec& hi) {
  for (int a = 0; a < g.d; ++a) {
    require(hi[a] > lo[a], ErrorCode::kDomain, "box bounds must satisfy lo < hi");
  }
  Density m = separable(g, [&](int a, int j) { return box_cell(g, j, lo[a], hi[a]); });
  normalize_mass(m);
  return m;
}

Density bimodal_density(const GridSpec& g, const Vec& c1, const Vec& c2, double sigma,
                        double weight1) {
  require(weight1 >= 0.0 && weight1 <= 1.0, ErrorCode::kDomain, "weight must be in [0,1]");
  Density a = gaussian_density(g, c1, sigma), b = gaussian_density(g, c2, sigma);
  for (std::size_t c = 0; c < a.values.size(); ++c) {
    a.values[c] = weight1 * a.values[c] + (1.0 - weight1) * b.values[c];
  }
  normalize_mass(a);
  return a;
}

Density ring_density(const GridSpec& g, double radius, double width) {
  require(g.d == 2, ErrorCode::kUnsupported, "ring density needs d = 2");
  require(radius >= 0.0 && width > 0.0, ErrorCode::kDomain, "ring radius/width");
  g.validate();
  Density m{g, std::vector<double>(g.cells(), 0.0)};
  // 4x4 sub-cell quadrature of exp(-(r - radius)^2 / (2 width^2)).
  constexpr int q = 4;
  const double dx = g.dx();
  for (std::size_t c = 0; c < g.cells(); ++c) {
    const Vec x = g.cell_center(c);
    double acc = 0.0;
    for (int i = 0; i < q; ++i) {
      for (int j = 0; j < q; ++j) {
        const double px = x[0] + ((i + 0.5) / q - 0.5) * dx;
        const double py = x[1] + ((j + 0.5) / q - 0.5) * dx;
        const double r = std::hypot(px, py) - radius;
        acc += std::exp(-r * r / (2.0 * width * width));
      }
    }
    m.values[c] = acc / (q * q);
  }
  normalize_mass(m);
  return m;
}

Density random_mixture(const GridSpec& g, std::uint64_t seed, double floor) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> count(1, 3);
  std::uniform_real_distribution<double> pos(-0.5 * g.R, 0.5 * g.R);
  std::uniform_real_distribution<double> wid(0.1 * g.R, 0.25 * g.R);
  std::uniform_real_distribution<double> wt(0.5, 1.5);
  const int k = count(rng);
  Density m{g, std::vector<double>(g.cells(), 0.0)};
  for (int i = 0; i < k; ++i) {
    const Vec c{pos(rng), g.d == 2 ? pos(rng) : 0.0};
    const double s = wid(rng), w = wt(rng);
    const Density part = gaussian_density(g, c, s);
    for (std::size_t j = 0; j < m.values.size(); ++j) m.values[j] += w * part.values[j];
  }
  normalize_mass(m);
  if (floor > 0.0) {
    const double vol = 2.0 * g.R * (g.d == 2 ? 2.0 * g.R : 1.0);
    for (double& v : m.values) v += floor / vol;
    normalize_mass(m);
  }
  return m;
}

void jitter_density(Density& m, double amplitude, std::uint64_t seed) {
  require(amplitude >= 0.0 && amplitude < 1.0, ErrorCode::kDomain, "jitter amplitude in [0,1)");
  if (amplitude == 0.0) return;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& v : m.values) v *= 1.0 + amplitude * u(rng);
  normalize_mass(m);
}

}  // namespace mfplan
