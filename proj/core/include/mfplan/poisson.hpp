#pragma once

#include <memory>
#include <span>
#include <vector>

namespace mfplan {

// Direct solver for the cell-centred Neumann Laplacian on a tensor grid,
//
//   sum_a -(phi[i+e_a] - 2 phi[i] + phi[i-e_a]) / h_a^2 = rhs[i]
//
// with reflecting ghost cells on every face of the box. The operator is
// diagonalised by DCT-II along every axis. The constant mode is singular: the
// right-hand side must have zero sum (the mean is removed before inversion)
// and the returned potential has zero mean.
class NeumannPoisson {
 public:
  // `dims` are the extents in row-major order (first axis slowest).
  NeumannPoisson(std::vector<int> dims, std::vector<double> spacings);
  ~NeumannPoisson();
  NeumannPoisson(NeumannPoisson&&) noexcept;
  NeumannPoisson& operator=(NeumannPoisson&&) noexcept;
  NeumannPoisson(const NeumannPoisson&) = delete;
  NeumannPoisson& operator=(const NeumannPoisson&) = delete;

  std::size_t size() const { return size_; }

  // Overwrites `data` (rhs on entry, potential on exit). Returns the mean that
  // was removed from the right-hand side (a compatibility residual).
  double solve(std::span<double> data) const;

  // Applies the operator itself (used by tests to check the inversion).
  void apply(std::span<const double> phi, std::span<double> out) const;

 private:
  struct Plans;
  std::vector<int> dims_;
  std::vector<double> spacings_;
  std::size_t size_ = 0;
  std::vector<double> inv_eigen_;
  std::unique_ptr<Plans> plans_;
};

}  // namespace mfplan
