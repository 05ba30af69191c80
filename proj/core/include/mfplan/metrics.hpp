#pragma once

#include <span>
#include <vector>

#include "mfplan/grid.hpp"
#include "mfplan/model.hpp"
#include "mfplan/primal.hpp"

namespace mfplan {

// One-dimensional quantile function of a piecewise-constant density,
// normalised to unit mass. Piecewise linear through the nodes (s_i, x_i);
// repeated s values encode jumps across empty cells.
struct QuantileFunction {
  std::vector<double> s;
  std::vector<double> x;

  double operator()(double level) const;
};

QuantileFunction quantile_function(const Density& m);

// Exact for piecewise-constant densities (quantiles are merged on a common
// level partition and the squared difference is integrated in closed form).
double w2_1d(const Density& m0, const Density& m1);
double w1_1d(const Density& m0, const Density& m1);
// W1 between the empirical measure of `samples` and the normalised density.
double w1_1d_samples(std::span<const double> samples, const Density& m);

// Push-forward of the uniform level measure by (1-t) Q0 + t Q1, rendered as
// exact cell averages on the grid of m0. Mass is the interpolated mass.
Density displacement_interpolation_1d(const Density& m0, const Density& m1, double t);
// Integral of x^2 against the exact (unrendered) interpolant, unit mass.
double displacement_second_moment_1d(const Density& m0, const Density& m1, double t);
// Integral of rho^p for the exact (unrendered) interpolant, unit mass.
double displacement_lp_power_1d(const Density& m0, const Density& m1, double t, double p);

// Model with H = |p|^2/(2a) and F = (m + m^p)/(2a).
ModelSpec kl_model(double a, double p);

struct KlCost {
  double a = 0.0;
  double cost = 0.0;
  double relative_gap = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Solves the planning problem for kl_model(a, p) on the grid of m0.
KlCost kl_cost(const Density& m0, const Density& m1, double a, double p,
               const SolverConfig& config);

double kl_upper_bound(const Density& m0, const Density& m1, double a, double p);

struct KlDistance {
  double value = 0.0;
  double argmin_a = 0.0;
  std::vector<KlCost> evaluations;  // grid points first, then refinement points
};

// Minimum of kl_cost over `a_grid`, optionally refined by golden-section search
// in log(a) between the neighbours of the best grid point.
KlDistance kl_distance(const Density& m0, const Density& m1, std::vector<double> a_grid, double p,
                       const SolverConfig& config, bool refine = false, int refine_steps = 8);

// Heat semigroup with reflecting walls: cell-integrated Gaussian kernel of
// variance 2t, with mirror images, columns renormalised to preserve mass.
Density heat_connector(const Density& m, double t);

double fisher_information(const Density& m);

struct HeatSample {
  double t = 0.0;
  double lp = 0.0;
  double l2 = 0.0;
  double fisher = 0.0;
  double stated_fisher_bound = 0.0;    // d / (8 pi t)
  double gaussian_fisher_bound = 0.0;  // d / (2 t), Fisher information of g_t
  double boundary_mass = 0.0;
  double mass = 0.0;
  bool resolved = false;  // boundary mass < 1% and sqrt(2t) >= 2 dx
};

struct HeatPathReport {
  std::vector<HeatSample> samples;
  double p = 2.0;
  double lp_slope = 0.0;        // least-squares slope of log ||S_t m||_p vs log t
  double expected_slope = 0.0;  // -(1 - 1/p) d / 2
  bool slope_ok = false;        // within 0.05
  double worst_stated_ratio = 0.0;   // max fisher / stated bound
  double worst_gaussian_ratio = 0.0; // max fisher / gaussian bound
  bool stated_fisher_ok = false;     // ratio <= 1.1 on resolved samples
  bool gaussian_fisher_ok = false;
};

HeatPathReport heat_path_estimates(const Density& m, double p, const std::vector<double>& times);

}  // namespace mfplan
