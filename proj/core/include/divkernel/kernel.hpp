#pragma once

#include <functional>
#include <limits>
#include <string>

namespace divkernel {

/// Smoothing kernel K with the constants the estimators need. K_l(x) = K(x/l)/l.
struct KernelSpec {
  std::string name;
  std::function<double(double)> evaluate;
  double l1_norm = 1.0;
  double l2_norm = 1.0;
  /// Index of the first non-vanishing moment (2 for symmetric second-order kernels).
  double order = 2.0;
  /// |K(x)| is negligible (or zero) for |x| beyond this many bandwidths.
  double effective_radius = std::numeric_limits<double>::infinity();
  /// Optional closed form: K_l * K_l' = K_{self_convolution(l, l')}.
  std::function<double(double, double)> self_convolution;
  /// Optional Fourier transform of K (real: kernels here are even).
  std::function<double(double)> fourier;
  /// |fourier(w)| is negligible for |w| beyond this.
  double fourier_cutoff = std::numeric_limits<double>::infinity();

  double scaled(double x, double bandwidth) const { return evaluate(x / bandwidth) / bandwidth; }
  bool has_self_convolution() const { return static_cast<bool>(self_convolution); }
  bool has_fourier() const { return static_cast<bool>(fourier) && fourier_cutoff < 1e300; }
};

/// Standard normal density: l1 = 1, l2 = 2^{-1/2} pi^{-1/4},
/// K_l * K_l' = K_{sqrt(l^2 + l'^2)}.
KernelSpec gaussian_kernel();

/// Copy of `k` with the closed-form convolution and Fourier transform removed,
/// forcing the quadrature paths.
KernelSpec without_closed_forms(KernelSpec k);

}  // namespace divkernel
