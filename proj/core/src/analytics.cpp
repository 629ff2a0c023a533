#include "divkernel/analytics.hpp"

#include <cmath>

#include "divkernel/errors.hpp"

namespace divkernel::analytics {

using detail::require;

double PopulationLaw::p() const { return std::exp(-rate * horizon); }

void PopulationLaw::validate() const {
  require(n0 >= 1, "n0 must be at least 1");
  require(std::isfinite(rate) && rate > 0.0, "rate must be positive");
  require(std::isfinite(horizon) && horizon >= 0.0, "horizon must be nonnegative");
}

double nt_pmf(const PopulationLaw& law, std::uint64_t n) {
  law.validate();
  if (n < law.n0) return 0.0;
  const double rt = law.rate * law.horizon;
  const auto k = static_cast<double>(n - law.n0);
  if (rt == 0.0) return n == law.n0 ? 1.0 : 0.0;
  const double n0 = law.n0;
  // log C(n-1, n-n0) + n0 log p + k log(1-p), with log(1-p) = log(-expm1(-RT))
  const double log_binom = std::lgamma(static_cast<double>(n)) - std::lgamma(k + 1.0) -
                           std::lgamma(n0);
  const double log_q = std::log(-std::expm1(-rt));
  return std::exp(log_binom - n0 * rt + (k == 0.0 ? 0.0 : k * log_q));
}

double nt_mean(const PopulationLaw& law) {
  law.validate();
  return law.n0 * std::exp(law.rate * law.horizon);
}

double inv_nt_expectation(const PopulationLaw& law) {
  law.validate();
  require(law.horizon > 0.0, "inv_nt_expectation requires a positive horizon");
  const double rt = law.rate * law.horizon;
  const double p = std::exp(-rt);
  const double q = -std::expm1(-rt);
  if (law.n0 == 1) return rt * p / q;

  // pmf(n + 1) / pmf(n) = q * n / (n + 1 - n0), decreasing in n towards q.
  const double n0 = law.n0;
  double pmf = std::exp(n0 * std::log(p));
  double sum = 0.0;
  constexpr std::uint64_t kMaxTerms = 10'000'000;
  for (std::uint64_t i = 0; i < kMaxTerms; ++i) {
    const double n = n0 + static_cast<double>(i);
    sum += pmf / n;
    const double ratio = q * n / (n + 1.0 - n0);
    pmf *= ratio;
    if (ratio < 1.0) {
      // every later term is at most the next one times ratio^j
      const double tail = pmf / (n + 1.0) / (1.0 - ratio);
      if (tail < 1e-12 * sum) return sum;
    }
  }
  throw ConvergenceError("inv_nt_expectation: series did not converge within 1e7 terms");
}

double inv_nt_expectation_alternating(const PopulationLaw& law) {
  law.validate();
  require(law.horizon > 0.0, "inv_nt_expectation requires a positive horizon");
  const double rt = law.rate * law.horizon;
  const int n0 = static_cast<int>(law.n0);
  const double ratio = std::exp(-rt) / -std::expm1(-rt);
  double inner = rt;
  double binom = 1.0;
  for (int k = 1; k <= n0 - 1; ++k) {
    binom = binom * (n0 - k) / k;  // C(n0-1, k)
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    inner += binom * sign * std::expm1(k * rt) / k;
  }
  const double outer_sign = ((n0 - 1) % 2 == 0) ? 1.0 : -1.0;
  return std::pow(ratio, n0) * outer_sign * inner;
}

double auxiliary_mean(const AuxiliaryLaw& law, double t) {
  require(t >= 0.0, "auxiliary_mean requires t >= 0");
  require(law.rate > 0.0, "auxiliary_mean requires a positive rate");
  const double limit = law.limit();
  return (law.y0 - limit) * std::exp(-law.rate * t) + limit;
}

double rate_factor(std::uint32_t n0, double rate, double horizon) {
  require(n0 >= 1, "n0 must be at least 1");
  const double rt = rate * horizon;
  require(std::isfinite(rt) && rt > 0.0, "rate_factor requires R*T > 0");
  if (n0 == 1) return std::exp(-rt + std::log(rt)) / -std::expm1(-rt);
  return std::exp(-rt);
}

}  // namespace divkernel::analytics
