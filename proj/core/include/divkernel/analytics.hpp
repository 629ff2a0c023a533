#pragma once

#include <cstdint>

namespace divkernel::analytics {

/// Law of the population size N_T of a pure-birth process with per-cell
/// rate R started from n0 cells: negative binomial NB(n0, e^{-RT}).
struct PopulationLaw {
  std::uint32_t n0 = 1;
  double rate = 1.0;
  double horizon = 1.0;

  /// Success probability e^{-RT}.
  double p() const;
  void validate() const;
};

/// P(N_T = n). Zero for n < n0. Binomial coefficients in log space.
double nt_pmf(const PopulationLaw& law, std::uint64_t n);

/// E[N_T] = n0 e^{RT}.
double nt_mean(const PopulationLaw& law);

/// E[1/N_T]. Closed form for n0 = 1; truncated pmf series for n0 > 1, stopped
/// once a geometric bound on the remaining tail drops below 1e-12 of the sum.
/// Throws ConvergenceError past 1e7 terms.
double inv_nt_expectation(const PopulationLaw& law);

/// E[1/N_T] through the finite alternating sum in powers of e^{RT}. Cancels
/// catastrophically once n0 * R * T is moderate; kept as a cross-check.
double inv_nt_expectation_alternating(const PopulationLaw& law);

/// Mean of the one-particle auxiliary process:
/// (y0 - alpha/R) e^{-Rt} + alpha/R.
struct AuxiliaryLaw {
  double y0 = 1.0;
  double alpha = 0.0;
  double rate = 1.0;

  double limit() const { return alpha / rate; }
};

double auxiliary_mean(const AuxiliaryLaw& law, double t);

/// Inverse effective sample size used by the convergence rates:
/// e^{-RT + log(RT)} / (1 - e^{-RT}) when n0 = 1, e^{-RT} otherwise.
double rate_factor(std::uint32_t n0, double rate, double horizon);

}  // namespace divkernel::analytics
