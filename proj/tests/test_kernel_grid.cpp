#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "divkernel/errors.hpp"
#include "divkernel/grid.hpp"
#include "divkernel/kernel.hpp"
#include "doctest.h"

using namespace divkernel;
using boost::math::quadrature::gauss_kronrod;

TEST_CASE("gaussian kernel constants match quadrature") {
  const auto k = gaussian_kernel();
  auto f = [&](double x) { return k.evaluate(x); };
  auto f2 = [&](double x) { return k.evaluate(x) * k.evaluate(x); };
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(std::abs(gauss_kronrod<double, 61>::integrate(f, -inf, inf, 15, 1e-14) - 1.0) < 1e-8);
  CHECK(std::abs(gauss_kronrod<double, 61>::integrate(f2, -inf, inf, 15, 1e-14) - k.l2_norm * k.l2_norm) < 1e-8);
  CHECK(k.l1_norm == 1.0);
  CHECK(k.l2_norm == doctest::Approx(1.0 / std::sqrt(2.0 * std::sqrt(std::numbers::pi))).epsilon(1e-15));
  CHECK(k.self_convolution(0.3, 0.4) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(k.evaluate(0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-15));
  CHECK(k.scaled(0.0, 0.1) == doctest::Approx(3.989422804014327).epsilon(1e-14));
  CHECK(k.evaluate(k.effective_radius) < 1e-30);
  CHECK(k.fourier(k.fourier_cutoff) < 1e-17);
  // Fourier transform of the density at w: integral of cos(w x) K(x)
  for (double w : {0.5, 2.0, 4.0}) {
    auto c = [&](double x) { return std::cos(w * x) * k.evaluate(x); };
    CHECK(gauss_kronrod<double, 61>::integrate(c, -20.0, 20.0, 15, 1e-14) == doctest::Approx(k.fourier(w)).epsilon(1e-10));
  }
  const auto q = without_closed_forms(k);
  CHECK_FALSE(q.has_self_convolution());
  CHECK_FALSE(q.has_fourier());
  CHECK(q.evaluate(0.7) == k.evaluate(0.7));
}

TEST_CASE("evaluation grid") {
  EvaluationGrid g;
  CHECK_NOTHROW(g.validate());
  CHECK(g.spacing() == doctest::Approx(0.001));
  CHECK(g.point(0) == -0.5);
  CHECK(g.point(2000) == doctest::Approx(1.5));
  CHECK(g.is_symmetric());
  CHECK(g.points().size() == 2001);
  for (std::size_t i = 0; i < g.n_points; ++i) REQUIRE(g.point(i) + g.point(g.n_points - 1 - i) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS((EvaluationGrid{0.0, 1.5, 10}.validate()), InvalidArgument);
  CHECK_THROWS_AS((EvaluationGrid{-0.5, 1.0, 10}.validate()), InvalidArgument);
  CHECK_THROWS_AS((EvaluationGrid{-0.5, 1.5, 1}.validate()), InvalidArgument);
  CHECK_FALSE((EvaluationGrid{-0.5, 2.0, 11}.is_symmetric()));
}

TEST_CASE("trapezoid rule") {
  const std::vector<double> lin{0.0, 1.0, 2.0, 3.0};
  CHECK(trapezoid(lin, 0.5) == doctest::Approx(2.25));
  const std::vector<double> one{5.0};
  CHECK(trapezoid(one, 1.0) == 0.0);
  // quadratic on a fine grid: error O(h^2)
  std::vector<double> sq(1001);
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = std::pow(i / 1000.0, 2);
  CHECK(trapezoid(sq, 1e-3) == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("bandwidth grid sizes") {
  auto h = BandwidthGrid::for_sample(1000, 0.05, 128);
  REQUIRE(h.size() == 50);
  CHECK(h.largest() == 1.0);
  CHECK(h.smallest() == 1.0 / 50);
  for (std::size_t i = 0; i < h.size(); ++i) {
    CHECK(h.values[i] == 1.0 / static_cast<double>(i + 1));
    if (i > 0) CHECK(h.values[i] < h.values[i - 1]);
  }
  CHECK(BandwidthGrid::for_sample(100000, 0.05, 128).size() == 128);
  CHECK(BandwidthGrid::for_sample(3, 0.05, 128).size() == 1);
  CHECK(BandwidthGrid::for_sample(0, 0.05, 128).size() == 1);
  CHECK(BandwidthGrid::for_sample(59, 0.05, 128).size() == 2);
  CHECK_THROWS_AS(BandwidthGrid::for_sample(10, 0.0, 128), InvalidArgument);
  CHECK_THROWS_AS(BandwidthGrid::for_sample(10, 0.05, 0), InvalidArgument);
  CHECK_THROWS_AS(BandwidthGrid::for_sample(10, 0.05, 128, 0), InvalidArgument);

  // The floor only matters while floor(delta * m_t) is below it, and never
  // exceeds the sample size or the cap.
  CHECK(BandwidthGrid::for_sample(3, 0.05, 128, 10).size() == 3);
  CHECK(BandwidthGrid::for_sample(0, 0.05, 128, 10).size() == 1);
  CHECK(BandwidthGrid::for_sample(59, 0.05, 128, 10).size() == 10);
  CHECK(BandwidthGrid::for_sample(1000, 0.05, 128, 10).size() == 50);
  CHECK(BandwidthGrid::for_sample(59, 0.05, 6, 10).size() == 6);
  CHECK(BandwidthGrid::for_sample(59, 0.05, 128, 10).smallest() == 0.1);

  const auto custom = BandwidthGrid::from_values({0.2, 0.5, 0.1});
  CHECK(custom.values == std::vector<double>{0.5, 0.2, 0.1});
  CHECK_THROWS_AS(BandwidthGrid::from_values({0.2, 0.2}), InvalidArgument);
  CHECK_THROWS_AS(BandwidthGrid::from_values({}), InvalidArgument);
  CHECK_THROWS_AS(BandwidthGrid::from_values({-0.1}), InvalidArgument);
}
