#pragma once

#include <cmath>
#include <span>
#include <vector>

// Small sample statistics shared by the statistical tests.
namespace testing_stats {

struct Moments {
  double mean = 0.0;
  double var = 0.0;  // n - 1 denominator
  double n = 0.0;
  double se() const { return std::sqrt(var / n); }
};

inline Moments moments(std::span<const double> x) {
  Moments m;
  m.n = static_cast<double>(x.size());
  for (double v : x) m.mean += v;
  m.mean /= m.n;
  for (double v : x) m.var += (v - m.mean) * (v - m.mean);
  m.var /= (m.n - 1.0);
  return m;
}

// Standard error of the sample variance, from the fourth central moment.
inline double variance_se(std::span<const double> x) {
  const auto m = moments(x);
  double m4 = 0.0;
  for (double v : x) m4 += std::pow(v - m.mean, 4);
  m4 /= m.n;
  return std::sqrt((m4 - m.var * m.var) / m.n);
}

inline double correlation(std::span<const double> x, std::span<const double> y) {
  const auto mx = moments(x);
  const auto my = moments(y);
  double c = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) c += (x[i] - mx.mean) * (y[i] - my.mean);
  c /= (mx.n - 1.0);
  return c / std::sqrt(mx.var * my.var);
}

}  // namespace testing_stats
