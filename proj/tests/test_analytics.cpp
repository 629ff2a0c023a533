#include <cmath>

#include "divkernel/analytics.hpp"
#include "divkernel/errors.hpp"
#include "divkernel/simulation.hpp"
#include "doctest.h"
#include "stats.hpp"

using namespace divkernel;
using namespace divkernel::analytics;

namespace {

// Independent oracle: direct sum of pmf(n)/n with the pmf from the binomial
// recurrence, run far past any meaningful tail.
double inv_by_direct_sum(std::uint32_t n0, double rt) {
  const double p = std::exp(-rt), q = 1.0 - p;
  double pmf = std::pow(p, n0), sum = 0.0;
  for (std::uint64_t n = n0; n < n0 + 200000; ++n) {
    sum += pmf / static_cast<double>(n);
    pmf *= q * static_cast<double>(n) / static_cast<double>(n + 1 - n0);
  }
  return sum;
}

}  // namespace

TEST_CASE("nt_pmf special values") {
  const double ln2 = std::log(2.0);
  CHECK(nt_pmf({1, 1.0, ln2}, 1) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(nt_pmf({2, 1.0, ln2}, 2) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(nt_pmf({2, 1.0, ln2}, 1) == 0.0);
  // geometric: p q^(n-1)
  CHECK(nt_pmf({1, 0.5, 3.0}, 4) == doctest::Approx(std::exp(-1.5) * std::pow(1 - std::exp(-1.5), 3)).epsilon(1e-13));
  CHECK(std::isfinite(nt_pmf({3, 0.5, 20.0}, 10000000)));
}

TEST_CASE("nt_pmf is normalized") {
  const PopulationLaw law{2, 1.0, 1.0};
  double s = 0.0;
  for (std::uint64_t n = 2; n <= 5000; ++n) {
    const double v = nt_pmf(law, n);
    REQUIRE(v >= 0.0);
    s += v;
  }
  CHECK(std::abs(s - 1.0) < 1e-10);
  const PopulationLaw wide{5, 0.5, 8.0};
  s = 0.0;
  for (std::uint64_t n = 5; n <= 200000; ++n) s += nt_pmf(wide, n);
  CHECK(s > 1.0 - 1e-10);
}

TEST_CASE("nt_mean") {
  CHECK(nt_mean({1, 1.0, 0.0}) == 1.0);
  CHECK(nt_mean({1, 0.5, 13.0}) == doctest::Approx(665.1416330443618).epsilon(1e-14));
  CHECK(nt_mean({3, 1.0, 2.0}) == doctest::Approx(22.16716829679195).epsilon(1e-14));
}

TEST_CASE("E[1/N_T] closed form, bounds and series") {
  const double ln2 = std::log(2.0);
  CHECK(inv_nt_expectation({1, 1.0, ln2}) == doctest::Approx(ln2).epsilon(1e-14));
  CHECK(inv_nt_expectation({1, 2.0, ln2 / 2}) == doctest::Approx(ln2).epsilon(1e-14));

  const double v = inv_nt_expectation({2, 1.0, 1.0});
  CHECK(v >= std::exp(-1.0) / 2);
  CHECK(v <= std::exp(-1.0));
  CHECK(v == doctest::Approx(inv_by_direct_sum(2, 1.0)).epsilon(1e-11));

  const double series = inv_nt_expectation({2, 0.1, 0.1});
  const double alternating = inv_nt_expectation_alternating({2, 0.1, 0.1});
  CHECK(std::abs(series - alternating) < 1e-9 * series);
  for (std::uint32_t n0 : {2u, 3u, 4u})
    CHECK(inv_nt_expectation_alternating({n0, 1.0, 1.0}) == doctest::Approx(inv_nt_expectation({n0, 1.0, 1.0})).epsilon(1e-9));

  for (std::uint32_t n0 : {2u, 3u, 5u, 10u})
    for (double rt : {0.05, 0.5, 2.0, 6.0}) {
      CAPTURE(n0);
      CAPTURE(rt);
      const double e = inv_nt_expectation({n0, 1.0, rt});
      CHECK(e == doctest::Approx(inv_by_direct_sum(n0, rt)).epsilon(1e-11));
      CHECK(e >= std::exp(-rt) / n0);
      CHECK(e <= std::exp(-rt) / (n0 - 1));
    }
  CHECK_THROWS_AS(inv_nt_expectation({2, 1.0, 0.0}), InvalidArgument);
}

TEST_CASE("E[1/N_T] decreases in T") {
  for (std::uint32_t n0 : {1u, 2u, 4u}) {
    double prev = 1.0 / n0 + 1e-12;
    for (double t = 0.1; t <= 10.0; t += 0.3) {
      const double v = inv_nt_expectation({n0, 0.7, t});
      CHECK(v < prev);
      prev = v;
    }
  }
}

TEST_CASE("E[1/N_T] agrees with simulation") {
  for (std::uint32_t n0 : {1u, 2u, 5u})
    for (double rt : {0.5, 1.0, 2.0}) {
      std::vector<double> inv(100000);
      sim::SimConfig c;
      c.n0 = n0;
      c.division_rate = 1.0;
      c.growth_rate = 0.0;
      c.horizon = rt;
      for (std::size_t r = 0; r < inv.size(); ++r) {
        c.seed = derive_seed(1234, {n0, r, static_cast<std::uint64_t>(rt * 10)});
        inv[r] = 1.0 / static_cast<double>(n0 + sim::simulate_fractions(c).size());
      }
      const auto m = testing_stats::moments(inv);
      CAPTURE(n0);
      CAPTURE(rt);
      CHECK(std::abs(m.mean - inv_nt_expectation({n0, 1.0, rt})) < 3 * m.se());
    }
}

TEST_CASE("auxiliary mean") {
  CHECK(auxiliary_mean({2.0, 0.45, 0.4}, 0.0) == 2.0);
  CHECK(auxiliary_mean({1.125, 0.45, 0.4}, 17.0) == doctest::Approx(1.125).epsilon(1e-15));
  CHECK(auxiliary_mean({1.0, 0.45, 0.4}, 24.0) ==
        doctest::Approx((1 - 1.125) * std::exp(-9.6) + 1.125).epsilon(1e-15));
  CHECK(auxiliary_mean({1.0, 0.45, 0.4}, 24.0) == doctest::Approx(1.1249915339079386).epsilon(1e-14));
  const AuxiliaryLaw law{3.0, 0.3, 0.7};
  CHECK(std::abs(auxiliary_mean(law, 50.0 / 0.7) - law.limit()) < 1e-6 * law.limit());

  // log |gap| is affine in t with slope -R
  std::vector<double> ts, ys;
  for (double t = 0.0; t <= 20.0; t += 1.0) {
    ts.push_back(t);
    ys.push_back(std::log(std::abs(auxiliary_mean(law, t) - law.limit())));
  }
  double mt = 0, my = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    mt += ts[i];
    my += ys[i];
  }
  mt /= ts.size();
  my /= ys.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    sxy += (ts[i] - mt) * (ys[i] - my);
    sxx += (ts[i] - mt) * (ts[i] - mt);
  }
  CHECK(std::abs(sxy / sxx + 0.7) < 1e-9);
}

TEST_CASE("rate factor") {
  CHECK(rate_factor(2, 0.5, 13.0) == doctest::Approx(0.0015034391929775724).epsilon(1e-14));
  CHECK(rate_factor(1, 1.0, std::log(2.0)) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(rate_factor(1, 1.0, std::log(2.0)) == doctest::Approx(inv_nt_expectation({1, 1.0, std::log(2.0)})));
  const double rt = 40.0;
  CHECK(rate_factor(1, 1.0, rt) / std::exp(-rt + std::log(rt)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(rate_factor(1, 1.0, 0.0), InvalidArgument);
}
