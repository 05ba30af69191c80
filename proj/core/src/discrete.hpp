#pragma once

// Discrete operators shared by the primal solver and the dual diagnostics.
//
// Energy on the staggered grid, h = dt * dx^d:
//   B_h = h * sum_k w_k sum_i [F(m_ki) + V_H m_ki]        (w_k = 1/2 at k = 0, nt)
//       + h * sum_{k,a,f} psi(rho_kf, w_kf)
// with rho_kf the mean of m over the 2 slices bounding time cell k and the 2
// cells adjacent to face f (a missing cell counts as zero) and
//   psi(rho, w) = (w + z_a rho)^2 / (2 g rho).
// Pairing with a multiplier u on time cells gives face momenta
// P_f = (u_right - u_left)/dx, face Hamiltonians h_f = g P^2/2 + z_a P
// (boundary faces: -z_a^2/(2g)) and the slice Hamiltonian
//   H_k,i = sum_a mean_4(h_f) - V_H        (interior slices).

#include <array>
#include <vector>

#include "mfplan/grid.hpp"
#include "mfplan/model.hpp"

namespace mfplan::detail {

using FaceArrays = std::array<std::vector<double>, 2>;

// Face densities rho for every time cell and face (nt * faces(a) per axis).
FaceArrays face_density(const DensityField& m);

// Adds `scale * rho-adjoint(y)` into the slices of `out`.
void add_face_density_adjoint(const GridSpec& g, const FaceArrays& y, double scale,
                              DensityField& out);

// P on interior faces (0 on boundary faces).
FaceArrays face_momentum(const CellField& u);

// h_f for every face given P.
FaceArrays face_hamiltonian(const DiscreteModel& dm, const FaceArrays& P);

// psi for one face; +inf outside the domain.
double kinetic_density(const PointModel& face, int axis, double rho, double w);

// Sum over axes of 1/4 * sum of h over the faces of cell i in time cell k.
double quarter_face_sum(const GridSpec& g, const FaceArrays& h, int k, std::size_t cell);

// -D_t u + H on interior slices (endpoint slices left at zero).
SliceField hj_expression(const DiscreteModel& dm, const CellField& u, const FaceArrays& h);

double slice_weight(const GridSpec& g, int k);

}  // namespace mfplan::detail
