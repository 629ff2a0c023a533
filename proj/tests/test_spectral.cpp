#include <algorithm>
#include <cmath>

#include "divkernel/errors.hpp"
#include "divkernel/estimation.hpp"
#include "divkernel/rng.hpp"
#include "divkernel/spectral_kde.hpp"
#include "doctest.h"

using namespace divkernel;

namespace {

std::vector<double> draws(std::size_t n, std::uint64_t seed) {
  Pcg32 rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = rng.beta(2.0, 6.0);
  return x;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace

TEST_CASE("spectral estimates match direct sums") {
  const auto k = gaussian_kernel();
  const EvaluationGrid grid{};
  for (std::size_t n : {1u, 17u, 2000u}) {
    const auto x = draws(n, n);
    const estimation::Sample s(x);
    SpectralKde sk(x, k, grid, 1.0 / 256, 1.5);
    for (double l : {1.0 / 256, 0.01, 0.1, 0.5, 1.5}) {
      const auto direct = estimation::kde(s, k, l, grid);
      const auto spec = sk.evaluate(l);
      double peak = *std::max_element(direct.values.begin(), direct.values.end());
      CAPTURE(n);
      CAPTURE(l);
      CHECK(max_abs_diff(spec, direct.values) < 1e-12 * std::max(1.0, peak));
      CHECK(sk.pair_sum(l) == doctest::Approx(estimation::loo_pair_sum_direct(s, k, l)).epsilon(1e-10));
    }
  }
}

TEST_CASE("spectral estimates on an odd grid") {
  const auto k = gaussian_kernel();
  const EvaluationGrid grid{-0.25, 1.25, 333};
  const auto x = draws(500, 99);
  SpectralKde sk(x, k, grid, 0.02, 0.3);
  for (double l : {0.02, 0.0731, 0.3}) {
    const auto direct = estimation::kde(estimation::Sample(x), k, l, grid);
    CHECK(max_abs_diff(sk.evaluate(l), direct.values) < 1e-11);
  }
}

TEST_CASE("spectral engine preconditions") {
  const auto k = gaussian_kernel();
  const EvaluationGrid grid{};
  CHECK(SpectralKde::supports(k));
  CHECK_FALSE(SpectralKde::supports(without_closed_forms(k)));
  const std::vector<double> x{0.5};
  CHECK_THROWS_AS(SpectralKde(x, without_closed_forms(k), grid, 0.1, 1.0), InvalidArgument);
  CHECK_THROWS_AS(SpectralKde(x, k, grid, 0.5, 0.1), InvalidArgument);
  SpectralKde sk(x, k, grid, 0.1, 1.0);
  CHECK_THROWS_AS(sk.evaluate(0.01), InvalidArgument);
  CHECK(sk.pair_sum(0.5) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}
