#include <algorithm>
#include <boost/math/distributions/beta.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "divkernel/errors.hpp"
#include "divkernel/kernel_model.hpp"
#include "doctest.h"
#include "stats.hpp"

using namespace divkernel;
using boost::math::quadrature::gauss_kronrod;

namespace {

std::vector<double> draws(const DivisionKernelModel& m, std::size_t n, std::uint64_t seed) {
  Pcg32 rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = m.sample(rng);
  return x;
}

double integrate(const std::function<double(double)>& f) {
  return gauss_kronrod<double, 61>::integrate(f, 0.0, 1.0, 15, 1e-13);
}

}  // namespace

TEST_CASE("beta density agrees with boost") {
  boost::math::beta_distribution<> b26(2.0, 6.0);
  for (double x : {0.01, 0.2, 0.5, 0.77, 0.99}) CHECK(beta_density(x, 2.0, 6.0) == doctest::Approx(boost::math::pdf(b26, x)).epsilon(1e-12));
  CHECK(beta_density(0.0, 2.0, 2.0) == 0.0);
  CHECK(beta_density(1.2, 2.0, 2.0) == 0.0);
  CHECK(beta_density(-0.1, 2.0, 2.0) == 0.0);
}

TEST_CASE("densities integrate to one and moments match quadrature") {
  const auto models = {DivisionKernelModel::beta(2.0), DivisionKernelModel::beta(0.6),
                       DivisionKernelModel::default_mixture()};
  for (const auto& m : models) {
    CAPTURE(m.describe());
    // Beta(0.6, 0.6) has integrable endpoint singularities.
    boost::math::quadrature::tanh_sinh<double> ts;
    const double mass = ts.integrate([&](double x) { return m.density(x); }, 0.0, 1.0);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
  }
  const auto mix = DivisionKernelModel::default_mixture();
  const double mean = integrate([&](double x) { return x * mix.density(x); });
  const double second = integrate([&](double x) { return x * x * mix.density(x); });
  CHECK(mix.mean() == doctest::Approx(mean).epsilon(1e-10));
  CHECK(mix.variance() == doctest::Approx(second - mean * mean).epsilon(1e-10));
  CHECK(mix.variance() == doctest::Approx(1.0 / 12.0).epsilon(1e-12));
}

TEST_CASE("Beta(2,2) draws are centred at one half") {
  const auto x = draws(DivisionKernelModel::beta(2.0), 1000000, 5);
  const auto m = testing_stats::moments(x);
  CHECK(std::abs(m.mean - 0.5) < 3 * m.se());
  for (double v : x) REQUIRE((v > 0.0 && v < 1.0));
}

TEST_CASE("mixture draws match quadrature moments") {
  const auto mix = DivisionKernelModel::default_mixture();
  const double mean = integrate([&](double x) { return x * mix.density(x); });
  const double var = integrate([&](double x) { return (x - mean) * (x - mean) * mix.density(x); });
  const auto x = draws(mix, 1000000, 6);
  const auto m = testing_stats::moments(x);
  CHECK(std::abs(m.mean - 0.5) < 3 * m.se());
  CHECK(std::abs(m.var - var) < 3 * testing_stats::variance_se(x));
}

TEST_CASE("tabulated uniform passes Kolmogorov-Smirnov") {
  const auto uni = DivisionKernelModel::tabulated({0.0, 0.25, 1.0}, {1.0, 1.0, 1.0});
  auto x = draws(uni, 100000, 8);
  std::sort(x.begin(), x.end());
  double d = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    d = std::max({d, (i + 1) / n - x[i], x[i] - i / n});
  CHECK(d < 1.628 / std::sqrt(n));  // 1% critical value
}

TEST_CASE("tabulated kernel samples a sloped density correctly") {
  // h(x) = 2x on [0, 1]: mean 2/3, variance 1/18.
  const auto tri = DivisionKernelModel::tabulated({0.0, 1.0}, {0.0, 4.0});
  CHECK(tri.density(0.5) == doctest::Approx(1.0));
  const auto x = draws(tri, 400000, 9);
  const auto m = testing_stats::moments(x);
  CHECK(std::abs(m.mean - 2.0 / 3.0) < 3 * m.se());
  CHECK(std::abs(m.var - 1.0 / 18.0) < 4 * testing_stats::variance_se(x));
  CHECK(tri.mean() == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("invalid kernels are rejected") {
  CHECK_THROWS_AS(DivisionKernelModel::beta(0.0), InvalidArgument);
  CHECK_THROWS_AS(DivisionKernelModel::beta(std::nan("")), InvalidArgument);
  CHECK_THROWS_AS(DivisionKernelModel::beta_mixture(1.5, 2, 2, 2, 2), InvalidArgument);
  CHECK_THROWS_AS(DivisionKernelModel::tabulated({0.0, 0.5}, {1.0}), InvalidArgument);
  CHECK_THROWS_AS(DivisionKernelModel::tabulated({0.5, 0.2}, {1.0, 1.0}), InvalidArgument);
  CHECK_THROWS_AS(DivisionKernelModel::tabulated({0.0, 1.0}, {-1.0, 1.0}), InvalidArgument);
  CHECK_THROWS_AS(DivisionKernelModel::tabulated({-0.1, 1.0}, {1.0, 1.0}), InvalidArgument);
}

TEST_CASE("symmetry and beta accessors") {
  CHECK(DivisionKernelModel::beta(2.0).is_symmetric());
  CHECK(DivisionKernelModel::default_mixture().is_symmetric());
  CHECK_FALSE(DivisionKernelModel::beta_mixture(0.3, 2, 6, 6, 2).is_symmetric());
  REQUIRE(DivisionKernelModel::beta(3.0).as_beta() != nullptr);
  CHECK(DivisionKernelModel::beta(3.0).as_beta()->a == 3.0);
  CHECK(DivisionKernelModel::default_mixture().as_beta() == nullptr);
}
