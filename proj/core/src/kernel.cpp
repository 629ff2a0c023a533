#include "divkernel/kernel.hpp"

#include <cmath>
#include <numbers>

namespace divkernel {

KernelSpec gaussian_kernel() {
  KernelSpec k;
  k.name = "gaussian";
  k.evaluate = [](double x) { return std::exp(-0.5 * x * x) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2); };
  k.l1_norm = 1.0;
  k.l2_norm = std::pow(2.0, -0.5) * std::pow(std::numbers::pi, -0.25);
  k.order = 2.0;
  // exp(-x^2/2) < 1e-31 beyond 12
  k.effective_radius = 12.0;
  k.self_convolution = [](double l1, double l2) { return std::hypot(l1, l2); };
  k.fourier = [](double w) { return std::exp(-0.5 * w * w); };
  // exp(-w^2/2) < 3e-18 beyond 9
  k.fourier_cutoff = 9.0;
  return k;
}

KernelSpec without_closed_forms(KernelSpec k) {
  k.self_convolution = nullptr;
  k.fourier = nullptr;
  k.fourier_cutoff = std::numeric_limits<double>::infinity();
  k.name += "/quadrature";
  return k;
}

}  // namespace divkernel
