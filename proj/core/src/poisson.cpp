#include "mfplan/poisson.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <numeric>

#include "mfplan/error.hpp"

namespace mfplan {

namespace {

// FFTW's planner is not thread safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct NeumannPoisson::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  double* buffer = nullptr;

  ~Plans() {
    std::lock_guard lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
    if (buffer) fftw_free(buffer);
  }
};

NeumannPoisson::NeumannPoisson(std::vector<int> dims, std::vector<double> spacings)
    : dims_(std::move(dims)), spacings_(std::move(spacings)) {
  require(!dims_.empty() && dims_.size() == spacings_.size(), ErrorCode::kInvalidArgument,
          "NeumannPoisson: dims and spacings must be non-empty and of equal length");
  size_ = 1;
  for (int n : dims_) {
    require(n >= 1, ErrorCode::kInvalidArgument, "NeumannPoisson: extents must be positive");
    size_ *= static_cast<std::size_t>(n);
  }

  // Eigenvalues 4 sin^2(pi j / 2n) / h^2 per axis, summed over axes.
  const std::size_t rank = dims_.size();
  std::vector<std::vector<double>> axis_eigen(rank);
  for (std::size_t a = 0; a < rank; ++a) {
    const int n = dims_[a];
    const double h2 = spacings_[a] * spacings_[a];
    axis_eigen[a].resize(n);
    for (int j = 0; j < n; ++j) {
      const double s = std::sin(std::numbers::pi * j / (2.0 * n));
      axis_eigen[a][j] = 4.0 * s * s / h2;
    }
  }
  double normalisation = 1.0;
  for (int n : dims_) normalisation *= 2.0 * n;

  inv_eigen_.assign(size_, 0.0);
  std::vector<int> idx(rank, 0);
  for (std::size_t flat = 0; flat < size_; ++flat) {
    double lambda = 0.0;
    for (std::size_t a = 0; a < rank; ++a) lambda += axis_eigen[a][idx[a]];
    inv_eigen_[flat] = flat == 0 ? 0.0 : 1.0 / (lambda * normalisation);
    for (std::size_t a = rank; a-- > 0;) {
      if (++idx[a] < dims_[a]) break;
      idx[a] = 0;
    }
  }

  plans_ = std::make_unique<Plans>();
  std::lock_guard lock(planner_mutex());
  plans_->buffer = fftw_alloc_real(size_);
  std::vector<fftw_r2r_kind> fwd(rank, FFTW_REDFT10), bwd(rank, FFTW_REDFT01);
  plans_->forward = fftw_plan_r2r(static_cast<int>(rank), dims_.data(), plans_->buffer,
                                  plans_->buffer, fwd.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
  plans_->backward = fftw_plan_r2r(static_cast<int>(rank), dims_.data(), plans_->buffer,
                                   plans_->buffer, bwd.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
  require(plans_->forward && plans_->backward, ErrorCode::kNumerical,
          "NeumannPoisson: FFTW planning failed");
}

NeumannPoisson::~NeumannPoisson() = default;
NeumannPoisson::NeumannPoisson(NeumannPoisson&&) noexcept = default;
NeumannPoisson& NeumannPoisson::operator=(NeumannPoisson&&) noexcept = default;

double NeumannPoisson::solve(std::span<double> data) const {
  require(data.size() == size_, ErrorCode::kShapeMismatch, "NeumannPoisson::solve: size");
  const double mean = std::accumulate(data.begin(), data.end(), 0.0) / static_cast<double>(size_);
  // new-array execute keeps solve() const and re-entrant for distinct buffers.
  std::vector<double> work(data.begin(), data.end());
  for (double& v : work) v -= mean;
  fftw_execute_r2r(plans_->forward, work.data(), work.data());
  for (std::size_t i = 0; i < size_; ++i) work[i] *= inv_eigen_[i];
  fftw_execute_r2r(plans_->backward, work.data(), work.data());
  std::copy(work.begin(), work.end(), data.begin());
  return mean;
}

void NeumannPoisson::apply(std::span<const double> phi, std::span<double> out) const {
  require(phi.size() == size_ && out.size() == size_, ErrorCode::kShapeMismatch,
          "NeumannPoisson::apply: size");
  std::fill(out.begin(), out.end(), 0.0);
  const std::size_t rank = dims_.size();
  std::vector<std::size_t> strides(rank, 1);
  for (std::size_t a = rank - 1; a-- > 0;) strides[a] = strides[a + 1] * dims_[a + 1];
  std::vector<int> idx(rank, 0);
  for (std::size_t flat = 0; flat < size_; ++flat) {
    double acc = 0.0;
    for (std::size_t a = 0; a < rank; ++a) {
      const double h2 = spacings_[a] * spacings_[a];
      const double centre = phi[flat];
      const double lo = idx[a] > 0 ? phi[flat - strides[a]] : centre;
      const double hi = idx[a] + 1 < dims_[a] ? phi[flat + strides[a]] : centre;
      acc += (2.0 * centre - lo - hi) / h2;
    }
    out[flat] = acc;
    for (std::size_t a = rank; a-- > 0;) {
      if (++idx[a] < dims_[a]) break;
      idx[a] = 0;
    }
  }
}

}  // namespace mfplan
