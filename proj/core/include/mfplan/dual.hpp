#pragma once

#include <span>
#include <vector>

#include "mfplan/grid.hpp"
#include "mfplan/model.hpp"
#include "mfplan/primal.hpp"

namespace mfplan {

// u lives on time cells; alpha lives on time slices. Only the interior slices
// of alpha enter the dual value; the endpoint slices repeat their neighbours.
struct DualPair {
  CellField u;
  SliceField alpha;
};

// Shifts u so that sum u(last cell) m1 dx^d = 0 and sets
// alpha = max(f(x,m), -D_t u + H(x,Du)) on interior slices.
DualPair recover_dual(const DiscreteModel& dm, const DensityField& m, CellField u);
DualPair recover_dual(const ModelSpec& model, const Solution& solution);

// max(alpha, f(x,0)) slice by slice.
SliceField clamp_alpha(const DiscreteModel& dm, const SliceField& alpha);

// Discrete dual value. Besides the trace and F* terms it carries the exact
// endpoint-slice contributions of the discrete energy:
//   h sum_i [ (F(m_e) + V_H m_e)/2 - m_e * (face Hamiltonian of the adjacent time cell)/4 ].
double dual_energy(const DiscreteModel& dm, const CellField& u, const SliceField& alpha,
                   std::span<const double> m0, std::span<const double> m1);
double dual_energy(const ModelSpec& model, const CellField& u, const SliceField& alpha,
                   std::span<const double> m0, std::span<const double> m1);

// -D_t u + H(x, D_x u) on interior slices; zero on the endpoint slices.
SliceField hj_value(const DiscreteModel& dm, const CellField& u);
// (hj_value - alpha)_+ on interior slices.
SliceField hj_residual(const DiscreteModel& dm, const CellField& u, const SliceField& alpha);
SliceField hj_residual(const ModelSpec& model, const CellField& u, const SliceField& alpha);

struct DiagnosticsReport {
  double B = 0.0;
  double A = 0.0;
  double gap = 0.0;
  double relative_gap = 0.0;
  double yh_integral = 0.0;
  double yf_integral = 0.0;
  double defect_mass = 0.0;
  double contact_defect = 0.0;   // h * sum m (alpha - HJ) over interior slices
  double constraint_pairing = 0.0;  // h * <u, continuity residual>
  // |defect_mass - contact_defect - constraint_pairing|; guards the assembly.
  double identity_error = 0.0;
  double hj_violation = 0.0;     // h * sum of the HJ residual
  double hj_violation_support = 0.0;  // same, restricted to m > delta
  double yf_support = 0.0;       // Y_F integral restricted to m > delta
  double continuity_residual = 0.0;
  double mass_drift = 0.0;       // max |mass(slice) - mass(slice 0)|
  double boundary_mass = 0.0;    // max over slices
  double min_alpha_slack = 0.0;  // min(alpha - f(x,0)) over interior slices
  double delta = 0.0;
  double restoration_blend = 0.0;
  std::vector<SliceNorms> per_slice;
};

// All certificate quantities for a primal-dual quadruple. The pair (m, w)
// must be continuity-feasible for gap = B - A to be a valid bound.
DiagnosticsReport duality_report(const DiscreteModel& dm, const DensityField& m,
                                 const MomentumField& w, const CellField& u,
                                 const SliceField& alpha, double delta);
DiagnosticsReport duality_report(const ModelSpec& model, const Solution& solution);

// 1e-8 * max(m).
double default_density_floor(const DensityField& m);

}  // namespace mfplan
