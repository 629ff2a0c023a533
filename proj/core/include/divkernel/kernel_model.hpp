#pragma once

#include <string>
#include <variant>
#include <vector>

#include "divkernel/rng.hpp"

namespace divkernel {

/// Symmetric Beta(a, a) division kernel.
struct BetaKernel {
  double a = 2.0;
};

/// w * Beta(a1, b1) + (1 - w) * Beta(a2, b2).
struct BetaMixtureKernel {
  double weight = 0.5;
  double a1 = 2.0, b1 = 6.0;
  double a2 = 6.0, b2 = 2.0;
};

/// Piecewise-linear density tabulated on an increasing grid inside [0, 1].
/// Construct through DivisionKernelModel::tabulated so the table is
/// validated and normalized.
struct TabulatedKernel {
  std::vector<double> grid;
  std::vector<double> values;
  std::vector<double> cdf;  // cumulative mass at each grid node
};

/// Law H of the fraction of toxicity inherited by one daughter.
class DivisionKernelModel {
 public:
  using Variant = std::variant<BetaKernel, BetaMixtureKernel, TabulatedKernel>;

  static DivisionKernelModel beta(double a);
  static DivisionKernelModel beta_mixture(double weight, double a1, double b1, double a2, double b2);
  /// The two-bump kernel used for the mixture reconstruction experiments.
  static DivisionKernelModel default_mixture() { return beta_mixture(0.5, 2.0, 6.0, 6.0, 2.0); }
  /// Normalizes `values` so the trapezoid integral over `grid` is one.
  static DivisionKernelModel tabulated(std::vector<double> grid, std::vector<double> values);

  double density(double gamma) const;

  /// Draw strictly inside (0, 1); boundary values are redrawn.
  double sample(Pcg32& rng) const;

  double mean() const;
  double variance() const;

  /// True when the density is symmetric about 1/2 by construction.
  bool is_symmetric() const;

  /// Set only for the BetaKernel variant.
  const BetaKernel* as_beta() const { return std::get_if<BetaKernel>(&variant_); }
  const Variant& variant() const { return variant_; }

  std::string describe() const;

 private:
  explicit DivisionKernelModel(Variant v) : variant_(std::move(v)) {}
  Variant variant_;
};

/// Beta(a, b) probability density, zero outside (0, 1).
double beta_density(double x, double a, double b);

}  // namespace divkernel
