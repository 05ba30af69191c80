#include "mfplan/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mfplan/error.hpp"

namespace mfplan {

SpatialFunction SpatialFunction::sampled(const GridSpec& grid, std::vector<double> values) {
  grid.validate();
  require(values.size() == grid.cells(), ErrorCode::kShapeMismatch,
          "SpatialFunction: sample count does not match grid");
  for (double v : values) {
    require(std::isfinite(v), ErrorCode::kInvalidArgument, "SpatialFunction: non-finite sample");
  }
  SpatialFunction f;
  f.sampled_ = true;
  f.grid_ = grid;
  f.values_ = std::move(values);
  return f;
}

namespace {

// Position of x between cell centres: lower index and weight of the upper one.
std::pair<int, double> locate(const GridSpec& g, double x) {
  double s = (x + g.R) / g.dx() - 0.5;
  s = std::clamp(s, 0.0, static_cast<double>(g.nx - 1));
  int i = static_cast<int>(std::floor(s));
  if (i >= g.nx - 1) i = g.nx - 2;
  return {i, s - i};
}

}  // namespace

double SpatialFunction::operator()(const Vec& x) const {
  if (!sampled_) return constant_;
  const auto [i, fi] = locate(grid_, x[0]);
  if (grid_.d == 1) return (1.0 - fi) * values_[i] + fi * values_[i + 1];
  const auto [j, fj] = locate(grid_, x[1]);
  const std::size_t n = static_cast<std::size_t>(grid_.nx);
  const double v00 = values_[i * n + j], v01 = values_[i * n + j + 1];
  const double v10 = values_[(i + 1) * n + j], v11 = values_[(i + 1) * n + j + 1];
  return (1.0 - fi) * ((1.0 - fj) * v00 + fj * v01) + fi * ((1.0 - fj) * v10 + fj * v11);
}

double SpatialFunction::min() const {
  return sampled_ ? *std::min_element(values_.begin(), values_.end()) : constant_;
}

double SpatialFunction::max() const {
  return sampled_ ? *std::max_element(values_.begin(), values_.end()) : constant_;
}

bool ModelSpec::x_independent() const {
  return g.is_constant() && z[0].is_constant() && z[1].is_constant() && V_H.is_constant() &&
         a.is_constant() && V_f.is_constant();
}

void ModelSpec::validate() const {
  require(std::isfinite(p) && p > 1.0, ErrorCode::kInvalidArgument, "model: p must be > 1");
  require(c_H >= 1.0 && c_f >= 1.0, ErrorCode::kInvalidArgument,
          "model: c_H and c_f must be >= 1");
  require(c_H_plus >= 0.0 && c_H_minus >= 0.0, ErrorCode::kInvalidArgument,
          "model: c_H_plus and c_H_minus must be >= 0");
  require(g.min() > 0.0, ErrorCode::kDomain, "model: metric g must be positive");
  require(a.min() > 0.0, ErrorCode::kDomain, "model: coupling weight a must be positive");
}

PointModel at(const ModelSpec& model, const Vec& x) {
  return PointModel{model.p, model.g(x), {model.z[0](x), model.z[1](x)}, model.V_H(x),
                    model.a(x), model.V_f(x)};
}

namespace {

double dot(const Vec& a, const Vec& b) { return a[0] * b[0] + a[1] * b[1]; }

void require_nonnegative(double m, const char* what) {
  if (!(m >= 0.0)) {
    std::ostringstream os;
    os << what << ": density must be nonnegative, got " << m;
    fail(ErrorCode::kDomain, os.str());
  }
}

}  // namespace

double hamiltonian(const PointModel& c, const Vec& p) {
  return 0.5 * c.g * dot(p, p) + dot(c.z, p) - c.V_H;
}

Vec hamiltonian_grad_p(const PointModel& c, const Vec& p) {
  return {c.g * p[0] + c.z[0], c.g * p[1] + c.z[1]};
}

double lagrangian(const PointModel& c, const Vec& v) {
  const Vec s{v[0] + c.z[0], v[1] + c.z[1]};
  return dot(s, s) / (2.0 * c.g) + c.V_H;
}

double coupling_f(const PointModel& c, double m) {
  require_nonnegative(m, "coupling_f");
  return c.a * std::pow(m, c.p - 1.0) + c.V_f;
}

double F_value(const PointModel& c, double m) {
  require_nonnegative(m, "F_value");
  return c.a * std::pow(m, c.p) / c.p + c.V_f * m;
}

double F_star_value(const PointModel& c, double alpha) {
  const double s = alpha - c.V_f;
  if (!(s > 0.0)) return 0.0;
  const double q = c.q();
  return std::pow(c.a, -q / c.p) * std::pow(s, q) / q;
}

double perspective_L(const PointModel& c, double m, const Vec& w) {
  require_nonnegative(m, "perspective_L");
  if (m == 0.0) return (w[0] == 0.0 && w[1] == 0.0) ? 0.0 : kInfinity;
  const Vec s{w[0] + c.z[0] * m, w[1] + c.z[1] * m};
  return dot(s, s) / (2.0 * c.g * m) + c.V_H * m;
}

double gap_YH(const PointModel& c, const Vec& p, const Vec& v) {
  // H(p) + p.v + L(v) collapses to one square for the quadratic family.
  const Vec s{c.g * p[0] + v[0] + c.z[0], c.g * p[1] + v[1] + c.z[1]};
  return dot(s, s) / (2.0 * c.g);
}

double gap_YF(const PointModel& c, double m, double alpha) {
  require_nonnegative(m, "gap_YF");
  const double y = F_value(c, m) - alpha * m + F_star_value(c, alpha);
  return std::max(y, 0.0);
}

double hamiltonian(const ModelSpec& model, const Vec& x, const Vec& p) {
  return hamiltonian(at(model, x), p);
}
Vec hamiltonian_grad_p(const ModelSpec& model, const Vec& x, const Vec& p) {
  return hamiltonian_grad_p(at(model, x), p);
}
double lagrangian(const ModelSpec& model, const Vec& x, const Vec& v) {
  return lagrangian(at(model, x), v);
}
double coupling_f(const ModelSpec& model, const Vec& x, double m) {
  return coupling_f(at(model, x), m);
}
double F_value(const ModelSpec& model, const Vec& x, double m) {
  return F_value(at(model, x), m);
}
double F_star_value(const ModelSpec& model, const Vec& x, double alpha) {
  return F_star_value(at(model, x), alpha);
}
double perspective_L(const ModelSpec& model, const Vec& x, double m, const Vec& w) {
  return perspective_L(at(model, x), m, w);
}
double gap_YH(const ModelSpec& model, const Vec& x, const Vec& p, const Vec& v) {
  return gap_YH(at(model, x), p, v);
}
double gap_YF(const ModelSpec& model, const Vec& x, double m, double alpha) {
  return gap_YF(at(model, x), m, alpha);
}

GrowthReport growth_check(const ModelSpec& model, const std::vector<Vec>& samples, int dim) {
  require(!samples.empty(), ErrorCode::kInvalidArgument, "growth_check: empty sample set");
  require(dim == 1 || dim == 2, ErrorCode::kUnsupported, "growth_check: dim must be 1 or 2");
  GrowthReport report;
  const double cfp = std::pow(model.c_f, model.p);

  auto record = [&](const char* bound, const Vec& x, double arg, double slack, double scale) {
    ++report.evaluations;
    if (slack < report.worst_slack) {
      report.worst_slack = slack;
      report.worst_bound = bound;
    }
    if (slack < -1e-12 * std::max(1.0, scale)) {
      report.ok = false;
      if (!report.first_violation) report.first_violation = GrowthViolation{bound, x, arg, slack};
    }
  };

  std::vector<Vec> directions;
  if (dim == 1) {
    directions = {{1.0, 0.0}, {-1.0, 0.0}};
  } else {
    for (int k = 0; k < 8; ++k) {
      const double th = k * 0.7853981633974483;
      directions.push_back({std::cos(th), std::sin(th)});
    }
  }
  const double magnitudes[] = {0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0, 200.0};
  const double densities[] = {0.0, 1e-3, 1e-2, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0};

  for (const Vec& x : samples) {
    const PointModel c = at(model, x);
    const double r2 = x[0] * x[0] + x[1] * x[1];
    const double gamma_minus = model.c_H_minus * (1.0 + r2);
    const double gamma_plus = model.c_H_plus * (1.0 + std::sqrt(r2));
    record("g_range", x, c.g, std::min(c.g - 1.0 / model.c_H, model.c_H - c.g), model.c_H);
    record("a_range", x, c.a, std::min(c.a - 1.0 / cfp, cfp - c.a), cfp);
    for (const Vec& dir : directions) {
      for (double s : magnitudes) {
        const Vec p{s * dir[0], s * dir[1]};
        const double h = hamiltonian(c, p);
        const double scale = std::abs(h) + s * s;
        record("H_lower", x, s, h - (s * s / (2.0 * model.c_H) - gamma_minus), scale);
        record("H_upper", x, s, (0.5 * model.c_H * s * s + gamma_plus) - h, scale);
      }
    }
    const double gamma_f = std::abs(c.V_f);
    for (double m : densities) {
      const double f = coupling_f(c, m);
      const double mp = std::pow(m, model.p - 1.0);
      const double scale = std::abs(f) + mp;
      record("f_lower", x, m, f - (mp / cfp - gamma_f), scale);
      record("f_upper", x, m, (cfp * mp + gamma_f) - f, scale);
    }
  }
  return report;
}

void require_growth(const ModelSpec& model, const std::vector<Vec>& samples, int dim) {
  const GrowthReport r = growth_check(model, samples, dim);
  if (!r.ok) {
    const GrowthViolation& v = *r.first_violation;
    std::ostringstream os;
    os << "growth bound " << v.bound << " violated at x=(" << v.x[0] << "," << v.x[1]
       << "), argument " << v.argument << ", slack " << v.slack;
    fail(ErrorCode::kBoundViolation, os.str());
  }
}

DiscreteModel::DiscreteModel(const ModelSpec& model, const GridSpec& g) : grid(g), p(model.p) {
  model.validate();
  g.validate();
  cells.resize(g.cells());
  for (std::size_t c = 0; c < g.cells(); ++c) cells[c] = at(model, g.cell_center(c));
  for (int axis = 0; axis < g.d; ++axis) {
    faces[axis].resize(g.faces(axis));
    for (std::size_t f = 0; f < g.faces(axis); ++f) faces[axis][f] = at(model, g.face_center(axis, f));
  }
}

}  // namespace mfplan
