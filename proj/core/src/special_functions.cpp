#include "divkernel/special_functions.hpp"

#include <cmath>

#include "divkernel/errors.hpp"

namespace divkernel {

double digamma(double x) {
  detail::require(x > 0.0 && std::isfinite(x), "digamma: argument must be positive");
  double shift = 0.0;
  while (x < 10.0) {
    shift -= 1.0 / x;
    x += 1.0;
  }
  const double r = 1.0 / (x * x);
  // Bernoulli series: -sum B_2k / (2k x^2k)
  const double series =
      r * (1.0 / 12 - r * (1.0 / 120 - r * (1.0 / 252 - r * (1.0 / 240 - r * (1.0 / 132 - r * (691.0 / 32760 - r / 12))))));
  return shift + std::log(x) - 0.5 / x - series;
}

double trigamma(double x) {
  detail::require(x > 0.0 && std::isfinite(x), "trigamma: argument must be positive");
  double shift = 0.0;
  while (x < 10.0) {
    shift += 1.0 / (x * x);
    x += 1.0;
  }
  const double r = 1.0 / (x * x);
  const double series =
      1.0 / 6 - r * (1.0 / 30 - r * (1.0 / 42 - r * (1.0 / 30 - r * (5.0 / 66 - r * (691.0 / 2730 - r * 7.0 / 6)))));
  return shift + 1.0 / x + 0.5 * r + series * r / x;
}

}  // namespace divkernel
