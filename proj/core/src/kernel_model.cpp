#include "divkernel/kernel_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "divkernel/errors.hpp"

namespace divkernel {

using detail::require;

double beta_density(double x, double a, double b) {
  if (!(x > 0.0 && x < 1.0)) return 0.0;
  const double log_norm = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  return std::exp(log_norm + (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x));
}

DivisionKernelModel DivisionKernelModel::beta(double a) {
  require(std::isfinite(a) && a > 0.0, "beta kernel parameter must be positive and finite");
  return DivisionKernelModel(BetaKernel{a});
}

DivisionKernelModel DivisionKernelModel::beta_mixture(double weight, double a1, double b1,
                                                      double a2, double b2) {
  require(std::isfinite(weight) && weight >= 0.0 && weight <= 1.0,
          "mixture weight must lie in [0, 1]");
  for (double p : {a1, b1, a2, b2})
    require(std::isfinite(p) && p > 0.0, "mixture Beta parameters must be positive and finite");
  return DivisionKernelModel(BetaMixtureKernel{weight, a1, b1, a2, b2});
}

DivisionKernelModel DivisionKernelModel::tabulated(std::vector<double> grid,
                                                   std::vector<double> values) {
  require(grid.size() >= 2, "tabulated kernel needs at least two nodes");
  require(grid.size() == values.size(), "tabulated kernel grid/value size mismatch");
  require(grid.front() >= 0.0 && grid.back() <= 1.0, "tabulated kernel grid must lie in [0, 1]");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    require(std::isfinite(grid[i]) && std::isfinite(values[i]) && values[i] >= 0.0,
            "tabulated kernel values must be finite and nonnegative");
    if (i > 0) require(grid[i] > grid[i - 1], "tabulated kernel grid must be increasing");
  }
  std::vector<double> cdf(grid.size(), 0.0);
  for (std::size_t i = 1; i < grid.size(); ++i)
    cdf[i] = cdf[i - 1] + 0.5 * (values[i] + values[i - 1]) * (grid[i] - grid[i - 1]);
  const double mass = cdf.back();
  require(mass > 0.0, "tabulated kernel has zero mass");
  for (auto& v : values) v /= mass;
  for (auto& c : cdf) c /= mass;
  cdf.back() = 1.0;
  return DivisionKernelModel(TabulatedKernel{std::move(grid), std::move(values), std::move(cdf)});
}

namespace {

double tabulated_density(const TabulatedKernel& t, double x) {
  if (x < t.grid.front() || x > t.grid.back()) return 0.0;
  auto it = std::upper_bound(t.grid.begin(), t.grid.end(), x);
  if (it == t.grid.end()) return t.values.back();
  const auto j = static_cast<std::size_t>(it - t.grid.begin());
  const double w = (x - t.grid[j - 1]) / (t.grid[j] - t.grid[j - 1]);
  return (1.0 - w) * t.values[j - 1] + w * t.values[j];
}

// Inverse of the piecewise-quadratic CDF of a piecewise-linear density.
double tabulated_quantile(const TabulatedKernel& t, double u) {
  auto it = std::upper_bound(t.cdf.begin(), t.cdf.end(), u);
  std::size_t j = static_cast<std::size_t>(it - t.cdf.begin());
  if (j == 0) j = 1;
  if (j >= t.cdf.size()) j = t.cdf.size() - 1;
  const double x0 = t.grid[j - 1];
  const double width = t.grid[j] - x0;
  const double f0 = t.values[j - 1];
  const double slope = (t.values[j] - f0) / width;
  const double target = u - t.cdf[j - 1];
  // Solve f0 * s + slope * s^2 / 2 = target for s in [0, width].
  double s;
  if (std::abs(slope) * width < 1e-12 * std::max(f0, 1e-300)) {
    s = f0 > 0.0 ? target / f0 : 0.5 * width;
  } else {
    const double disc = std::max(0.0, f0 * f0 + 2.0 * slope * target);
    s = 2.0 * target / (f0 + std::sqrt(disc));
  }
  return x0 + std::clamp(s, 0.0, width);
}

double beta_mean(double a, double b) { return a / (a + b); }
double beta_second_moment(double a, double b) { return a * (a + 1.0) / ((a + b) * (a + b + 1.0)); }

}  // namespace

double DivisionKernelModel::density(double gamma) const {
  return std::visit(
      [gamma](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, BetaKernel>) {
          return beta_density(gamma, k.a, k.a);
        } else if constexpr (std::is_same_v<K, BetaMixtureKernel>) {
          return k.weight * beta_density(gamma, k.a1, k.b1) +
                 (1.0 - k.weight) * beta_density(gamma, k.a2, k.b2);
        } else {
          return tabulated_density(k, gamma);
        }
      },
      variant_);
}

double DivisionKernelModel::sample(Pcg32& rng) const {
  for (;;) {
    const double g = std::visit(
        [&rng](const auto& k) -> double {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, BetaKernel>) {
            return rng.beta(k.a, k.a);
          } else if constexpr (std::is_same_v<K, BetaMixtureKernel>) {
            return rng.uniform() < k.weight ? rng.beta(k.a1, k.b1) : rng.beta(k.a2, k.b2);
          } else {
            return tabulated_quantile(k, rng.uniform());
          }
        },
        variant_);
    if (g > 0.0 && g < 1.0) return g;
  }
}

double DivisionKernelModel::mean() const {
  return std::visit(
      [](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, BetaKernel>) {
          return 0.5;
        } else if constexpr (std::is_same_v<K, BetaMixtureKernel>) {
          return k.weight * beta_mean(k.a1, k.b1) + (1.0 - k.weight) * beta_mean(k.a2, k.b2);
        } else {
          double m = 0.0;
          for (std::size_t i = 1; i < k.grid.size(); ++i) {
            const double x0 = k.grid[i - 1], x1 = k.grid[i];
            const double f0 = k.values[i - 1], f1 = k.values[i];
            // exact integral of x * (linear density) over the cell
            m += (x1 - x0) * (f0 * (2.0 * x0 + x1) + f1 * (x0 + 2.0 * x1)) / 6.0;
          }
          return m;
        }
      },
      variant_);
}

double DivisionKernelModel::variance() const {
  const double mu = mean();
  const double second = std::visit(
      [](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, BetaKernel>) {
          return beta_second_moment(k.a, k.a);
        } else if constexpr (std::is_same_v<K, BetaMixtureKernel>) {
          return k.weight * beta_second_moment(k.a1, k.b1) +
                 (1.0 - k.weight) * beta_second_moment(k.a2, k.b2);
        } else {
          double m2 = 0.0;
          for (std::size_t i = 1; i < k.grid.size(); ++i) {
            const double x0 = k.grid[i - 1], x1 = k.grid[i];
            const double f0 = k.values[i - 1], f1 = k.values[i];
            const double h = x1 - x0;
            // integral of x^2 * (f0 + (f1 - f0)(x - x0)/h) over [x0, x1]
            const double i2 = (x1 * x1 * x1 - x0 * x0 * x0) / 3.0;
            const double i3 = (x1 * x1 * x1 * x1 - x0 * x0 * x0 * x0) / 4.0;
            m2 += f0 * i2 + (f1 - f0) / h * (i3 - x0 * i2);
          }
          return m2;
        }
      },
      variant_);
  return second - mu * mu;
}

bool DivisionKernelModel::is_symmetric() const {
  if (std::holds_alternative<BetaKernel>(variant_)) return true;
  if (const auto* m = std::get_if<BetaMixtureKernel>(&variant_))
    return m->weight == 0.5 && m->a1 == m->b2 && m->b1 == m->a2;
  return false;
}

std::string DivisionKernelModel::describe() const {
  std::ostringstream os;
  std::visit(
      [&os](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, BetaKernel>) {
          os << "beta(" << k.a << "," << k.a << ")";
        } else if constexpr (std::is_same_v<K, BetaMixtureKernel>) {
          os << "mixture(" << k.weight << "*beta(" << k.a1 << "," << k.b1 << ")+"
             << (1.0 - k.weight) << "*beta(" << k.a2 << "," << k.b2 << "))";
        } else {
          os << "tabulated(" << k.grid.size() << " nodes)";
        }
      },
      variant_);
  return os.str();
}

}  // namespace divkernel
