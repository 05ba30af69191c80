#pragma once

// Staggered space-time grid on (0,1) x [-R,R]^d, d in {1,2}.
//
// Layout conventions (all storage is row-major, axis 0 slowest):
//   * slice fields  : nt+1 time slices t_k = k*dt, one value per spatial cell.
//                     Densities live here; slice 0 and slice nt are the endpoints.
//   * cell fields   : nt time cells centred at (k+1/2)*dt, one value per spatial
//                     cell. The continuity multiplier u lives here.
//   * momentum      : one scalar component per axis a, stored per time cell on
//                     the faces normal to a (nx+1 faces along a). Boundary faces
//                     carry the no-flux condition and are always zero.

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "mfplan/poisson.hpp"

namespace mfplan {

struct GridSpec {
  int d = 1;
  int nt = 32;
  int nx = 64;
  double R = 2.0;

  void validate() const;

  double dt() const { return 1.0 / nt; }
  double dx() const { return 2.0 * R / nx; }
  // Spatial cell volume dx^d and space-time cell volume dt*dx^d.
  double cell_volume() const;
  double spacetime_volume() const { return dt() * cell_volume(); }

  std::size_t cells() const;  // nx^d
  std::size_t faces(int /*axis*/) const { return cells() / nx * (nx + 1); }
  std::size_t lines() const { return cells() / nx; }  // grid lines along any axis

  // Cell centre coordinate along one axis.
  double center(int index) const { return -R + (index + 0.5) * dx(); }
  // Face coordinate along one axis, face f in [0, nx].
  double face_coord(int index) const { return -R + index * dx(); }

  // Multi-index of a flat cell index (unused trailing entries are zero).
  std::array<int, 2> cell_index(std::size_t flat) const;
  std::size_t flat_cell(const std::array<int, 2>& idx) const;
  std::array<double, 2> cell_center(std::size_t flat) const;

  // Centre of face `flat` of the face array normal to `axis`.
  std::array<double, 2> face_center(int axis, std::size_t flat) const;

  bool operator==(const GridSpec& other) const = default;
};

// Walks the grid lines along one axis. For line `l`, cell j of the line has
// flat index cell_base(l) + j*cell_stride and face f (0..nx) has flat index
// face_base(l) + f*face_stride inside the face array normal to `axis`.
class AxisLines {
 public:
  AxisLines(const GridSpec& grid, int axis);

  std::size_t count() const { return count_; }
  std::size_t cell_base(std::size_t line) const;
  std::size_t face_base(std::size_t line) const;
  std::size_t cell_stride() const { return cell_stride_; }
  std::size_t face_stride() const { return face_stride_; }

 private:
  int d_;
  int nx_;
  int axis_;
  std::size_t count_;
  std::size_t cell_stride_;
  std::size_t face_stride_;
};

// Scalar field on the nt+1 time slices.
class SliceField {
 public:
  SliceField() = default;
  explicit SliceField(const GridSpec& grid, double value = 0.0);

  const GridSpec& grid() const { return grid_; }
  std::size_t slices() const { return static_cast<std::size_t>(grid_.nt) + 1; }
  std::size_t cells() const { return cells_; }

  std::span<double> slice(std::size_t k) { return {values_.data() + k * cells_, cells_}; }
  std::span<const double> slice(std::size_t k) const {
    return {values_.data() + k * cells_, cells_};
  }
  double& at(std::size_t k, std::size_t cell) { return values_[k * cells_ + cell]; }
  double at(std::size_t k, std::size_t cell) const { return values_[k * cells_ + cell]; }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

 private:
  GridSpec grid_{};
  std::size_t cells_ = 0;
  std::vector<double> values_;
};

// Scalar field on the nt time cells.
class CellField {
 public:
  CellField() = default;
  explicit CellField(const GridSpec& grid, double value = 0.0);

  const GridSpec& grid() const { return grid_; }
  std::size_t steps() const { return static_cast<std::size_t>(grid_.nt); }
  std::size_t cells() const { return cells_; }

  std::span<double> slice(std::size_t k) { return {values_.data() + k * cells_, cells_}; }
  std::span<const double> slice(std::size_t k) const {
    return {values_.data() + k * cells_, cells_};
  }
  double& at(std::size_t k, std::size_t cell) { return values_[k * cells_ + cell]; }
  double at(std::size_t k, std::size_t cell) const { return values_[k * cells_ + cell]; }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

 private:
  GridSpec grid_{};
  std::size_t cells_ = 0;
  std::vector<double> values_;
};

// Face-staggered vector field: component a has nt * faces(a) entries.
class MomentumField {
 public:
  MomentumField() = default;
  explicit MomentumField(const GridSpec& grid, double value = 0.0);

  const GridSpec& grid() const { return grid_; }
  int dims() const { return grid_.d; }

  std::vector<double>& component(int axis) { return comp_[axis]; }
  const std::vector<double>& component(int axis) const { return comp_[axis]; }

  std::span<double> step(int axis, std::size_t k) {
    const std::size_t n = grid_.faces(axis);
    return {comp_[axis].data() + k * n, n};
  }
  std::span<const double> step(int axis, std::size_t k) const {
    const std::size_t n = grid_.faces(axis);
    return {comp_[axis].data() + k * n, n};
  }

  // Zeroes the normal component on the spatial boundary.
  void enforce_no_flux();

 private:
  GridSpec grid_{};
  std::array<std::vector<double>, 2> comp_;
};

using DensityField = SliceField;
using ScalarField = CellField;

// A single spatial density (one time slice), with its grid.
struct Density {
  GridSpec grid;
  std::vector<double> values;  // grid.cells() entries, mass per unit volume

  double mass() const;
};

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what);

// Discrete d_t m + div w per space-time cell.
CellField continuity_residual(const DensityField& m, const MomentumField& w);

double max_abs(std::span<const double> values);

// Euclidean projection of (m, w) onto {continuity residual = 0, m(0) = m0,
// m(1) = m1, no boundary flux}. One space-time Neumann Poisson solve.
struct ProjectionResult {
  DensityField m;
  MomentumField w;
};
ProjectionResult project_continuity(const DensityField& m, const MomentumField& w,
                                    std::span<const double> m0, std::span<const double> m1);

// Reusable form of project_continuity that keeps the transform plans alive.
// The continuity operator A maps the free unknowns (interior slices of m,
// interior faces of w) to cells; A A^T is the space-time Neumann Laplacian.
class ContinuityProjector {
 public:
  explicit ContinuityProjector(const GridSpec& grid);

  const GridSpec& grid() const { return grid_; }

  // In place: sets the endpoint slices to m0, m1, zeroes boundary flux and
  // removes the component normal to the constraint set.
  void project(DensityField& m, MomentumField& w, std::span<const double> m0,
               std::span<const double> m1) const;

  // phi = (A A^T)^{-1} rhs, zero-mean gauge.
  void solve_normal(CellField& rhs) const;

  // A applied to the free unknowns only (endpoint slices and boundary faces
  // are ignored), and its transpose.
  CellField apply(const DensityField& m, const MomentumField& w) const;
  void apply_transpose(const CellField& phi, DensityField& m, MomentumField& w) const;

 private:
  GridSpec grid_;
  NeumannPoisson poisson_;
};

// Minimal-norm no-flux momentum with div w_k = -(m_{k+1} - m_k)/dt in every
// time cell (spatial Neumann solve). Requires equal slice masses.
MomentumField momentum_for(const DensityField& m);

// Face <-> cell-centre transfer within one time cell. `interp_face_to_center`
// averages the two faces bounding each cell; `interp_center_to_face` averages
// the two cells adjacent to each interior face and leaves boundary faces at
// zero. The pair is adjoint on no-flux momentum fields.
std::vector<std::vector<double>> interp_face_to_center(const MomentumField& w);
MomentumField interp_center_to_face(const GridSpec& grid,
                                    const std::vector<std::vector<double>>& centered);

struct SliceNorms {
  double mass = 0.0;
  double l1_kappa = 0.0;  // sum kappa m dx^d, kappa = 1 + |x|^2
  double lp = 0.0;        // (sum m^p dx^d)^{1/p}
  double quadratic_moment = 0.0;
  double boundary_mass = 0.0;  // mass in the outermost ring of cells
};

struct WeightedNorms {
  std::vector<SliceNorms> per_slice;
  double l1_kappa = 0.0;  // space-time integrals with trapezoid weights in time
  double lp = 0.0;
  double quadratic_moment = 0.0;
};

SliceNorms slice_norms(const GridSpec& grid, std::span<const double> m, double p);
WeightedNorms weighted_norms(const DensityField& m, double p);

// kappa(x) = 1 + |x|^2 sampled per spatial cell.
std::vector<double> kappa_weights(const GridSpec& grid);

}  // namespace mfplan
