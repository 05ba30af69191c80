#pragma once

// Planning model: quadratic Hamiltonian with scalar metric and a power-law
// coupling,
//
//   H(x,p) = g(x)|p|^2 / 2 + z(x).p - V_H(x)
//   L(x,v) = sup_p [-v.p - H(x,p)] = |v + z(x)|^2 / (2 g(x)) + V_H(x)
//   f(x,m) = a(x) m^(p-1) + V_f(x),   F(x,m) = a(x) m^p / p + V_f(x) m
//
// Points and vectors are std::array<double,2>; in one dimension the second
// component is ignored and must be zero.

#include <array>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mfplan/grid.hpp"

namespace mfplan {

using Vec = std::array<double, 2>;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// A coefficient that is either a constant or sampled at the cell centres of a
// grid. Off-grid evaluation uses multilinear interpolation between centres and
// constant extrapolation outside the outermost centres.
class SpatialFunction {
 public:
  SpatialFunction(double value = 0.0) : constant_(value) {}  // NOLINT(implicit)
  static SpatialFunction sampled(const GridSpec& grid, std::vector<double> values);

  bool is_constant() const { return !sampled_; }
  double constant() const { return constant_; }
  const GridSpec& grid() const { return grid_; }
  const std::vector<double>& samples() const { return values_; }

  double operator()(const Vec& x) const;
  double min() const;
  double max() const;

 private:
  double constant_ = 0.0;
  bool sampled_ = false;
  GridSpec grid_{};
  std::vector<double> values_;
};

struct ModelSpec {
  double p = 2.0;
  SpatialFunction g = 1.0;
  std::array<SpatialFunction, 2> z{0.0, 0.0};
  SpatialFunction V_H = 0.0;
  SpatialFunction a = 1.0;
  SpatialFunction V_f = 0.0;
  double c_H = 1.0;
  double c_H_plus = 1.0;
  double c_H_minus = 1.0;
  double c_f = 1.0;

  double q() const { return p / (p - 1.0); }
  bool x_independent() const;
  // Checks p > 1, constants, g > 0 and a > 0 on the samples.
  void validate() const;
};

// Coefficients frozen at one point.
struct PointModel {
  double p = 2.0;
  double g = 1.0;
  Vec z{0.0, 0.0};
  double V_H = 0.0;
  double a = 1.0;
  double V_f = 0.0;

  double q() const { return p / (p - 1.0); }
};

PointModel at(const ModelSpec& model, const Vec& x);

double hamiltonian(const PointModel& c, const Vec& p);
Vec hamiltonian_grad_p(const PointModel& c, const Vec& p);
double lagrangian(const PointModel& c, const Vec& v);
double coupling_f(const PointModel& c, double m);
double F_value(const PointModel& c, double m);
double F_star_value(const PointModel& c, double alpha);
// m L(w/m) for m > 0, 0 at (0,0), +inf for m = 0 and w != 0; throws for m < 0.
double perspective_L(const PointModel& c, double m, const Vec& w);
double gap_YH(const PointModel& c, const Vec& p, const Vec& v);
double gap_YF(const PointModel& c, double m, double alpha);

double hamiltonian(const ModelSpec& model, const Vec& x, const Vec& p);
Vec hamiltonian_grad_p(const ModelSpec& model, const Vec& x, const Vec& p);
double lagrangian(const ModelSpec& model, const Vec& x, const Vec& v);
double coupling_f(const ModelSpec& model, const Vec& x, double m);
double F_value(const ModelSpec& model, const Vec& x, double m);
double F_star_value(const ModelSpec& model, const Vec& x, double alpha);
double perspective_L(const ModelSpec& model, const Vec& x, double m, const Vec& w);
double gap_YH(const ModelSpec& model, const Vec& x, const Vec& p, const Vec& v);
double gap_YF(const ModelSpec& model, const Vec& x, double m, double alpha);

struct GrowthViolation {
  std::string bound;  // "H_lower", "H_upper", "f_lower", "f_upper", "g_range", "a_range"
  Vec x{0.0, 0.0};
  double argument = 0.0;  // |p| or m at the violating sample
  double slack = 0.0;     // negative
};

struct GrowthReport {
  bool ok = true;
  std::size_t evaluations = 0;
  double worst_slack = kInfinity;
  std::string worst_bound;
  std::optional<GrowthViolation> first_violation;
};

// Evaluates the structural sandwiches
//   |p|^2/(2 c_H) - c_H^-(1+|x|^2) <= H(x,p) <= c_H |p|^2/2 + c_H^+(1+|x|)
//   m^(p-1)/c_f^p - |V_f| <= f(x,m) <= c_f^p m^(p-1) + |V_f|
// on a lattice of p and m values at every sample point. Report-only; use
// require_growth for the throwing variant.
GrowthReport growth_check(const ModelSpec& model, const std::vector<Vec>& samples, int dim);
void require_growth(const ModelSpec& model, const std::vector<Vec>& samples, int dim);

// Model coefficients evaluated once on a grid: at cell centres (used on time
// slices) and at face centres per axis.
struct DiscreteModel {
  GridSpec grid;
  double p = 2.0;
  std::vector<PointModel> cells;
  std::array<std::vector<PointModel>, 2> faces;

  DiscreteModel() = default;
  DiscreteModel(const ModelSpec& model, const GridSpec& grid);
};

}  // namespace mfplan
