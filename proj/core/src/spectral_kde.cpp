#include "divkernel/spectral_kde.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include "divkernel/errors.hpp"

namespace divkernel {

namespace {

// FFTW's planner is not reentrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

std::size_t next_smooth_size(std::size_t n) {
  auto smooth = [](std::size_t m) {
    for (std::size_t f : {2u, 3u, 5u})
      while (m % f == 0) m /= f;
    return m == 1;
  };
  if (n % 2 == 1) ++n;
  while (!smooth(n)) n += 2;
  return n;
}

}  // namespace

struct SpectralKde::Plan {
  std::size_t n;
  fftw_complex* spectrum;
  double* signal;
  fftw_plan plan;

  explicit Plan(std::size_t size) : n(size) {
    std::lock_guard lock(planner_mutex());
    spectrum = fftw_alloc_complex(n / 2 + 1);
    signal = fftw_alloc_real(n);
    plan = fftw_plan_dft_c2r_1d(static_cast<int>(n), spectrum, signal, FFTW_ESTIMATE);
  }
  ~Plan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
    fftw_free(spectrum);
    fftw_free(signal);
  }
};

SpectralKde::SpectralKde(std::span<const double> data, const KernelSpec& kernel,
                         const EvaluationGrid& grid, double min_bandwidth, double max_bandwidth)
    : kernel_(kernel), grid_(grid), n_(data.size()), min_bw_(min_bandwidth), max_bw_(max_bandwidth) {
  using detail::require;
  require(supports(kernel), "SpectralKde: kernel has no Fourier transform");
  require(!data.empty(), "SpectralKde: empty data");
  require(min_bandwidth > 0.0 && max_bandwidth >= min_bandwidth, "SpectralKde: bad bandwidth range");
  require(std::isfinite(kernel.effective_radius), "SpectralKde: kernel needs a finite effective radius");
  grid.validate();

  const double spacing = grid.spacing();
  const double omega_max = kernel.fourier_cutoff / min_bandwidth;
  // internal step h with pi / h >= 1.05 omega_max
  oversample_ = static_cast<std::size_t>(std::ceil(spacing * omega_max * 1.05 / std::numbers::pi));
  oversample_ = std::max<std::size_t>(oversample_, 1);
  const double step = spacing / static_cast<double>(oversample_);

  // Aliasing distance must exceed the kernel's reach at the widest bandwidth.
  const double span = grid.hi - grid.lo;
  const double reach = std::max(kernel.effective_radius, kernel.fourier_cutoff) * max_bandwidth;
  fft_size_ = next_smooth_size(static_cast<std::size_t>(std::ceil((span + reach) / step)) + 2);
  period_ = static_cast<double>(fft_size_) * step;

  const double omega_1 = 2.0 * std::numbers::pi / period_;
  const auto n_freq = std::min(static_cast<std::size_t>(std::ceil(omega_max / omega_1)) + 1,
                               fft_size_ / 2);
  ecf_.assign(n_freq, {0.0, 0.0});

  std::vector<double> u(data.begin(), data.end());
  std::sort(u.begin(), u.end());
  for (auto& x : u) x -= grid.lo;

  // Rotate each exp(-i w_k u_j) by exp(-i w_1 u_j), re-anchored exactly every 64 steps.
  const std::size_t n = u.size();
  std::vector<double> zr(n), zi(n), wr(n), wi(n);
  for (std::size_t j = 0; j < n; ++j) {
    wr[j] = std::cos(omega_1 * u[j]);
    wi[j] = -std::sin(omega_1 * u[j]);
  }
  constexpr std::size_t kAnchor = 64;
  for (std::size_t k = 0; k < n_freq; ++k) {
    if (k % kAnchor == 0) {
      const double w = omega_1 * static_cast<double>(k);
      for (std::size_t j = 0; j < n; ++j) {
        zr[j] = std::cos(w * u[j]);
        zi[j] = -std::sin(w * u[j]);
      }
    }
    double sr = 0.0, si = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      sr += zr[j];
      si += zi[j];
      const double r = zr[j] * wr[j] - zi[j] * wi[j];
      zi[j] = zr[j] * wi[j] + zi[j] * wr[j];
      zr[j] = r;
    }
    ecf_[k] = {sr / static_cast<double>(n), si / static_cast<double>(n)};
  }

  plan_ = std::make_unique<Plan>(fft_size_);
}

SpectralKde::~SpectralKde() = default;

double SpectralKde::kernel_hat(double bandwidth, std::size_t k) const {
  return kernel_.fourier(bandwidth * 2.0 * std::numbers::pi * static_cast<double>(k) / period_);
}

void SpectralKde::evaluate(double bandwidth, std::span<double> out) {
  detail::require(out.size() == grid_.n_points, "SpectralKde::evaluate: output size mismatch");
  detail::require(bandwidth >= min_bw_ * (1 - 1e-12) && bandwidth <= max_bw_ * (1 + 1e-12),
                  "SpectralKde::evaluate: bandwidth outside the prepared range");
  const std::size_t half = fft_size_ / 2 + 1;
  const double scale = 1.0 / period_;
  for (std::size_t k = 0; k < half; ++k) {
    if (k < ecf_.size()) {
      const double w = kernel_hat(bandwidth, k) * scale;
      plan_->spectrum[k][0] = w * ecf_[k].real();
      plan_->spectrum[k][1] = w * ecf_[k].imag();
    } else {
      plan_->spectrum[k][0] = 0.0;
      plan_->spectrum[k][1] = 0.0;
    }
  }
  fftw_execute(plan_->plan);
  for (std::size_t g = 0; g < out.size(); ++g) out[g] = plan_->signal[g * oversample_];
}

std::vector<double> SpectralKde::evaluate(double bandwidth) {
  std::vector<double> out(grid_.n_points);
  evaluate(bandwidth, out);
  return out;
}

double SpectralKde::pair_sum(double bandwidth) const {
  detail::require(bandwidth >= min_bw_ * (1 - 1e-12) && bandwidth <= max_bw_ * (1 + 1e-12),
                  "SpectralKde::pair_sum: bandwidth outside the prepared range");
  double acc = 0.0;
  for (std::size_t k = ecf_.size(); k-- > 1;) acc += kernel_hat(bandwidth, k) * std::norm(ecf_[k]);
  acc = kernel_hat(bandwidth, 0) + 2.0 * acc;
  const double n = static_cast<double>(n_);
  return n * n * acc / period_ - n * kernel_.evaluate(0.0) / bandwidth;
}

}  // namespace divkernel
