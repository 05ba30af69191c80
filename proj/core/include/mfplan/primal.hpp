#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mfplan/grid.hpp"
#include "mfplan/model.hpp"

namespace mfplan {

enum class InitStrategy { kLinearBlend, kDisplacement, kHeatConnector };

const char* to_string(InitStrategy s);
InitStrategy parse_init_strategy(std::string_view name);

struct HistoryEntry {
  int iteration = 0;
  double B = 0.0;
  double A = 0.0;
  double gap = 0.0;
  double relative_gap = 0.0;
  double yh_integral = 0.0;
  double yf_integral = 0.0;
  double defect_mass = 0.0;
  double primal_change = 0.0;  // ||x_k - x_{k-1}|| / (tau max(1, ||x_k||))
  double dual_change = 0.0;    // ||y_k - y_{k-1}|| / (sigma max(1, ||y_k||))
  double continuity_residual = 0.0;
  double restoration_blend = 0.0;
  double seconds = 0.0;
};

struct SolverConfig {
  int max_iters = 5000;
  // Zero selects 0.95/||K|| scaled by sqrt(step_ratio) (primal) and
  // 1/sqrt(step_ratio) (dual).
  double tau_primal = 0.0;
  double tau_dual = 0.0;
  double step_ratio = 1.0;
  double theta = 1.0;           // over-relaxation
  double stop_gap = 1e-4;       // relative duality gap
  double stop_residual = 0.0;   // fixed-point residual; 0 disables
  int check_every = 10;         // certificate evaluation stride (history rows)
  InitStrategy init = InitStrategy::kLinearBlend;
  double density_floor = -1.0;  // < 0 selects 1e-8 * max(m)
  int power_iterations = 50;
  double reference_bump = 0.25; // uniform admixture of the restoration reference
  double heat_time = 0.05;      // heat-connector smoothing time
  std::function<void(const HistoryEntry&)> on_check;  // optional progress hook
};

// Time-cell centred velocity, masked where the centred density is <= delta.
struct VelocityField {
  GridSpec grid;
  double delta = 0.0;
  std::array<std::vector<double>, 2> v;  // nt * cells per component
  std::vector<std::uint8_t> mask;        // 1 where defined
  std::vector<double> density;           // centred density
};

struct Solution {
  GridSpec grid;
  DensityField m;
  MomentumField w;
  CellField u;
  SliceField alpha;
  VelocityField v;
  std::vector<double> m0, m1;
  std::vector<HistoryEntry> history;
  int iterations = 0;
  bool converged = false;
  double restoration_blend = 0.0;
  double operator_norm = 0.0;
  double tau = 0.0;
  double sigma = 0.0;
  double delta = 0.0;
  double seconds = 0.0;
};

struct FlowPair {
  DensityField m;
  MomentumField w;
};

// Discrete action (trapezoid in time for the slice terms, face-averaged
// density for the kinetic term). +inf for negative densities or flux through
// vacuum.
double primal_energy(const DiscreteModel& dm, const DensityField& m, const MomentumField& w);
double primal_energy(const ModelSpec& model, const DensityField& m, const MomentumField& w);

// Feasible starting pair joining m0 to m1.
FlowPair initialize_flow(InitStrategy strategy, const GridSpec& grid, std::span<const double> m0,
                         std::span<const double> m1, double heat_time = 0.05);

VelocityField recover_velocity(const DensityField& m, const MomentumField& w, double delta);

// Largest singular value of the lifting operator, by power iteration.
double estimate_lift_norm(const GridSpec& grid, int iterations);

Solution solve_planning(const ModelSpec& model, const GridSpec& grid, std::span<const double> m0,
                        std::span<const double> m1, const SolverConfig& config);

struct AprioriReport {
  double kinetic = 0.0;         // sum |v|^2 m over unmasked centred cells
  double lp_integral = 0.0;     // integral of m^p over space-time
  double energy_bound = 0.0;    // E = c (B + C_F + c_H^+ M)
  double first_moment = 0.0;    // integral of (1 + |x|) m over space-time
  double momentum_norm = 0.0;   // ||w||_{2p/(p+1)}
  double holder_rhs = 0.0;      // ||rho||_p^{1/2} (sum |w|^2/rho)^{1/2}
  std::vector<double> root_moment;  // sqrt of the second moment per slice
  double moment_bound = 0.0;    // 1 + e sqrt(M0 + M1 + 2 c_H (C_3 + B)) - 1
  bool finite = true;
  bool energy_ok = true;
  bool holder_ok = true;
  bool moment_ok = true;
};

AprioriReport apriori_check(const ModelSpec& model, const Solution& solution);

}  // namespace mfplan
