#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

#include "divkernel/grid.hpp"
#include "divkernel/kernel.hpp"

namespace divkernel {

/// Exact kernel estimates for every bandwidth in [min_bandwidth, max_bandwidth]
/// from one pass over the data.
///
/// The empirical characteristic function phi(w_k) = (1/n) sum exp(-i w_k x_j)
/// is computed once on the frequencies w_k = 2 pi k / P. Grid values of the
/// P-periodized estimator at any bandwidth then cost one inverse real FFT, and
/// the leave-one-out pair sum is a weighted sum of |phi|^2 (Poisson summation).
/// P is chosen so the periodic images sit more than `effective_radius`
/// bandwidths away from the grid, and the sampling step so that the kernel's
/// spectrum is negligible beyond Nyquist; both errors are far below 1e-12.
///
/// Requires a kernel with a Fourier transform. Not thread-safe per instance;
/// separate instances may be used concurrently.
class SpectralKde {
 public:
  static bool supports(const KernelSpec& kernel) { return kernel.has_fourier(); }

  SpectralKde(std::span<const double> data, const KernelSpec& kernel, const EvaluationGrid& grid,
              double min_bandwidth, double max_bandwidth);
  ~SpectralKde();
  SpectralKde(const SpectralKde&) = delete;
  SpectralKde& operator=(const SpectralKde&) = delete;

  /// Estimator values on the grid; `out` must have grid.n_points entries.
  void evaluate(double bandwidth, std::span<double> out);
  std::vector<double> evaluate(double bandwidth);

  /// sum_{i != j} K_l(x_i - x_j).
  double pair_sum(double bandwidth) const;

  std::size_t fft_size() const { return fft_size_; }
  std::size_t frequencies() const { return ecf_.size(); }

 private:
  struct Plan;

  double kernel_hat(double bandwidth, std::size_t k) const;

  KernelSpec kernel_;
  EvaluationGrid grid_;
  std::size_t n_ = 0;
  double min_bw_ = 0.0;
  double max_bw_ = 0.0;
  std::size_t oversample_ = 1;
  std::size_t fft_size_ = 0;
  double period_ = 0.0;
  std::vector<std::complex<double>> ecf_;
  std::unique_ptr<Plan> plan_;
};

}  // namespace divkernel
