#pragma once

#include <cstdint>
#include <vector>

#include "mfplan/grid.hpp"
#include "mfplan/model.hpp"
#include "mfplan/primal.hpp"

namespace mfplan {

// Read-only interpolation of a solved flow: velocity and u on time cells,
// alpha on time slices; multilinear in space between cell centres and linear
// in time, clamped at the ends.
class FlowInterpolator {
 public:
  FlowInterpolator(const ModelSpec& model, const Solution& solution);

  const GridSpec& grid() const { return grid_; }
  const ModelSpec& model() const { return model_; }

  // Masked corners are dropped and the remaining weights renormalised;
  // `masked` is set when the point sits entirely in the masked region.
  Vec velocity(double t, const Vec& x, bool* masked = nullptr) const;
  double alpha(double t, const Vec& x) const;
  double u(double t, const Vec& x) const;
  // Traces at t = 0 and t = 1, extrapolated linearly from the first (last)
  // two time cells.
  double u_initial(const Vec& x) const;
  double u_final(const Vec& x) const;
  // L(x, v) + alpha(t, x).
  double running_cost(double t, const Vec& x, const Vec& v) const;

 private:
  struct Stencil {
    std::size_t cell[4];
    double weight[4];
    int count;
  };
  Stencil stencil(const Vec& x) const;
  double sample_cells(const std::vector<double>& data, std::size_t slice, const Vec& x) const;
  double along_time(const std::vector<double>& data, std::size_t slices, double pos,
                    const Vec& x) const;

  GridSpec grid_;
  ModelSpec model_;
  std::array<std::vector<double>, 2> v_;
  std::vector<std::uint8_t> mask_;
  std::vector<double> u_;
  std::vector<double> alpha_;
};

struct Trajectory {
  std::vector<double> times;       // recorded times, uniform on [0,1]
  std::vector<Vec> positions;
  std::vector<double> cost_so_far;
  double energy = 0.0;             // integral of |dgamma/dt|^2
  double path_cost = 0.0;          // integral of L(gamma, dgamma/dt) + alpha(t, gamma)
  bool clamped = false;
  bool low_confidence = false;     // masked for more than 10% of the steps
  double masked_fraction = 0.0;

  Vec position_at(double t) const;  // linear between recorded times
};

// i.i.d. samples from a piecewise-constant density.
std::vector<Vec> sample_particles(const Density& m0, std::size_t n, std::uint64_t seed);

// RK4 for dgamma/dt = v(t, gamma). Positions are recorded every
// `record_every` steps (and at t = 1).
Trajectory trace_characteristic(const FlowInterpolator& flow, const Vec& x0, int steps,
                                int record_every = 1);

std::vector<Trajectory> trace_ensemble(const FlowInterpolator& flow, const std::vector<Vec>& starts,
                                       int steps, int record_every = 1);

// f >= 0 and L >= 0 everywhere: V_f >= 0 and V_H >= 0.
bool positivity_convention(const ModelSpec& model);

struct SuperpositionReport {
  std::vector<double> times;          // 1/4, 1/2, 3/4, 1
  std::vector<double> discrepancy;    // W1 (d = 1) or histogram L1 (d = 2)
  double baseline = 0.0;              // n^{-1/2} * box diameter
  double tolerance = 0.0;             // 3 (dx + baseline)
  double mean_energy = 0.0;
  double field_kinetic = 0.0;         // sum |v|^2 rho over time cells
  std::size_t particles = 0;
  std::size_t low_confidence = 0;
  std::size_t clamped = 0;
  bool ok = false;                    // endpoint discrepancy <= tolerance
};

SuperpositionReport verify_superposition(const FlowInterpolator& flow, const Solution& solution,
                                         const std::vector<Trajectory>& paths);
SuperpositionReport verify_superposition(const ModelSpec& model, const Solution& solution,
                                         std::size_t n, std::uint64_t seed, int steps = 0);

struct OptimalityReport {
  std::vector<double> residual;  // path_cost - (u(0,gamma0) - u(1,gamma1)); NaN if excluded
  double median_abs_residual = 0.0;
  double p95_abs_residual = 0.0;
  double median_path_cost = 0.0;
  double mean_path_cost = 0.0;
  double potential_difference = 0.0;  // (sum u(0) m0 - sum u(1) m1) dx^d / mass
  std::size_t perturbations = 0;
  std::size_t perturbation_wins = 0;  // perturbed cost < traced cost - tol
  double worst_improvement = 0.0;
  double win_tolerance = 1e-3;
  std::size_t excluded = 0;
  bool nonnegative_model = false;
  bool negative_cost_seen = false;
  bool residual_ok = false;       // median |r| <= 5% median cost
  bool minimality_ok = false;     // >= 95% perturbations do not win
  bool bridge_ok = false;         // mean cost within 5% of potential difference
};

// `bumps` smooth perturbations A sin(k pi t) per path, deterministic in `seed`.
OptimalityReport path_optimality_check(const FlowInterpolator& flow, const Solution& solution,
                                       const std::vector<Trajectory>& paths, int bumps = 20,
                                       std::uint64_t seed = 1, double tolerance = 1e-3);

struct TransportPlanSummary {
  int bins = 0;        // per axis
  std::size_t side = 0;  // bins^d
  std::vector<double> joint;  // side x side, row = start bin, col = end bin, sums to 1
  std::vector<double> marginal0, marginal1;
  Vec mean_displacement{0.0, 0.0};
  double diagonal_spread = 0.0;  // rms of displacement minus its mean
};

TransportPlanSummary transport_plan_summary(const GridSpec& grid,
                                            const std::vector<Trajectory>& paths, int bins = 16);

}  // namespace mfplan
