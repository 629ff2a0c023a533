#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "divkernel/errors.hpp"
#include "divkernel/experiments.hpp"
#include "doctest.h"
#include "stats.hpp"

using namespace divkernel;
using namespace divkernel::experiments;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.horizons = {8.0};
  cfg.replicates = 6;
  cfg.threads = 1;
  cfg.master_seed = 7;
  return cfg;
}

bool same_report(const McReport& a, const McReport& b) {
  if (a.summary.size() != b.summary.size() || a.replicates.size() != b.replicates.size()) return false;
  for (std::size_t i = 0; i < a.replicates.size(); ++i) {
    const auto& x = a.replicates[i];
    const auto& y = b.replicates[i];
    const bool bw_equal = (std::isnan(x.bandwidth) && std::isnan(y.bandwidth)) || x.bandwidth == y.bandwidth;
    if (x.error != y.error || !bw_equal || x.m_t != y.m_t || x.method != y.method) return false;
  }
  return a.redraws == b.redraws;
}

}  // namespace

TEST_CASE("replicate samples") {
  auto cfg = small_config();
  const auto a = draw_replicate_sample(cfg, 8.0, 3);
  const auto b = draw_replicate_sample(cfg, 8.0, 3);
  CHECK(a.gammas == b.gammas);
  CHECK(hash_sample(a.gammas) == hash_sample(b.gammas));
  CHECK(hash_sample(a.gammas) != hash_sample(draw_replicate_sample(cfg, 8.0, 4).gammas));
  for (double g : a.gammas) CHECK((g > 0.0 && g < 1.0));

  // At a short horizon most trees have fewer than two divisions and get redrawn.
  std::uint32_t redraws = 0;
  for (std::uint32_t r = 0; r < 50; ++r) {
    const auto s = draw_replicate_sample(cfg, 0.5, r);
    CHECK(s.gammas.size() >= 2);
    redraws += s.redraws;
  }
  CHECK(redraws > 0);

  cfg.division_rate = 1e-9;
  CHECK_THROWS_AS(draw_replicate_sample(cfg, 1.0, 0), ConvergenceError);
}

TEST_CASE("hash_sample is FNV-1a over bit patterns") {
  CHECK(hash_sample({}) == 0xcbf29ce484222325ULL);
  const std::vector<double> z{0.0};
  const std::vector<double> nz{-0.0};
  CHECK(hash_sample(z) != hash_sample(nz));
}

TEST_CASE("summaries") {
  std::vector<ReplicateResult> rows(4);
  const double errs[] = {0.1, 0.2, 0.3, 0.4};
  for (std::size_t i = 0; i < 4; ++i) {
    rows[i].error = errs[i];
    rows[i].bandwidth = 0.1 * static_cast<double>(i + 1);
  }
  const auto s = summarize(13.0, Method::GL, rows);
  CHECK(s.mean_error == doctest::Approx(0.25));
  CHECK(s.sd_error == doctest::Approx(std::sqrt(0.0125)));
  CHECK(s.mean_bandwidth == doctest::Approx(0.25));
  CHECK(s.replicates == 4);
  const auto one = summarize(13.0, Method::GL, std::span(rows).first(1));
  CHECK(one.sd_error == 0.0);
}

TEST_CASE("Monte Carlo experiment") {
  auto cfg = small_config();
  const auto report = run_mise_experiment(cfg);
  REQUIRE(report.summary.size() == cfg.methods.size());
  REQUIRE(report.replicates.size() == cfg.methods.size() * cfg.replicates);
  CHECK_FALSE(report.symmetrized);

  SUBCASE("summaries recompute from the replicate rows") {
    for (const auto& s : report.summary) {
      std::vector<ReplicateResult> mine;
      for (const auto& r : report.replicates)
        if (r.method == s.method && r.horizon == s.horizon) mine.push_back(r);
      const auto again = summarize(s.horizon, s.method, mine);
      CHECK(again.mean_error == s.mean_error);
      CHECK(again.sd_error == s.sd_error);
      CHECK(again.replicates == cfg.replicates);
    }
    CHECK(std::isnan(report.at(8.0, Method::ML).mean_bandwidth));
    CHECK_THROWS(report.at(9.0, Method::GL));
  }
  SUBCASE("replicate rows carry the drawn sample size") {
    for (const auto& r : report.replicates)
      CHECK(r.m_t == draw_replicate_sample(cfg, r.horizon, r.replicate).gammas.size());
  }
  SUBCASE("the Monte Carlo oracle uses one bandwidth for every replicate") {
    double bw = -1.0;
    for (const auto& r : report.replicates) {
      if (r.method != Method::Oracle) continue;
      if (bw < 0) bw = r.bandwidth;
      CHECK(r.bandwidth == bw);
    }
  }
  SUBCASE("results are reproducible and independent of the thread count") {
    CHECK(same_report(report, run_mise_experiment(cfg)));
    cfg.threads = 3;
    CHECK(same_report(report, run_mise_experiment(cfg)));
  }
  SUBCASE("a single replicate has zero spread") {
    cfg.replicates = 1;
    for (const auto& s : run_mise_experiment(cfg).summary) CHECK(s.sd_error == 0.0);
  }
  SUBCASE("the per-sample oracle is never worse than the Monte Carlo oracle") {
    cfg.oracle_mode = OracleMode::PerSample;
    const auto ps = run_mise_experiment(cfg);
    CHECK(ps.at(8.0, Method::Oracle).mean_error <= report.at(8.0, Method::Oracle).mean_error);
  }
}

TEST_CASE("ML is dropped for a non-Beta truth") {
  auto cfg = small_config();
  cfg.truth = DivisionKernelModel::default_mixture();
  cfg.replicates = 2;
  const auto report = run_mise_experiment(cfg);
  for (const auto& s : report.summary) CHECK(s.method != Method::ML);
  CHECK(report.summary.size() == 4);
}

TEST_CASE("symmetrization cannot hurt a symmetric truth") {
  auto cfg = small_config();
  cfg.methods = {Method::GL, Method::RoT};
  const auto plain = run_mise_experiment(cfg);
  const auto sym = run_symmetrized_experiment(cfg);
  CHECK(sym.symmetrized);
  REQUIRE(plain.replicates.size() == sym.replicates.size());
  for (std::size_t i = 0; i < plain.replicates.size(); ++i) {
    CHECK(sym.replicates[i].bandwidth == plain.replicates[i].bandwidth);
    CHECK(sym.replicates[i].error <= plain.replicates[i].error + 1e-15);
  }
}

TEST_CASE("errors shrink as the horizon grows") {
  auto cfg = small_config();
  cfg.methods = {Method::GL};
  cfg.horizons = {8.0, 14.0};
  cfg.replicates = 20;
  const auto r = run_mise_experiment(cfg);
  CHECK(r.at(14.0, Method::GL).mean_error < r.at(8.0, Method::GL).mean_error);
}

TEST_CASE("epsilon calibration") {
  auto cfg = small_config();
  cfg.horizons = {10.0};
  cfg.replicates = 8;
  const std::vector<double> eps{-0.9, -0.68, 0.0, 0.5};
  const auto rep = calibrate_epsilon(cfg, eps);
  REQUIRE(rep.rows.size() == eps.size());
  REQUIRE(rep.sample_hashes.size() == cfg.replicates);
  for (std::uint32_t r = 0; r < cfg.replicates; ++r)
    CHECK(rep.sample_hashes[r] == hash_sample(draw_replicate_sample(cfg, 10.0, r).gammas));

  for (std::size_t i = 0; i < eps.size(); ++i) {
    CHECK(rep.rows[i].epsilon == eps[i]);
    const double mean_sel = std::accumulate(rep.selected[i].begin(), rep.selected[i].end(), 0.0) / cfg.replicates;
    CHECK(rep.rows[i].mean_bandwidth == doctest::Approx(mean_sel));
    CHECK(rep.rows[i].mean_gap == doctest::Approx(mean_sel - rep.oracle_bandwidth));
    for (std::size_t j = 0; j < eps.size(); ++j)
      if (rep.selected[i] == rep.selected[j]) CHECK(rep.rows[i].mise == rep.rows[j].mise);
  }
  // Larger epsilon means a larger variance penalty and wider bandwidths.
  CHECK(rep.rows.back().mean_bandwidth >= rep.rows.front().mean_bandwidth);

  // The -0.68 column reproduces the GL rows of the Monte Carlo experiment.
  cfg.methods = {Method::GL};
  const auto mc = run_mise_experiment(cfg);
  for (std::uint32_t r = 0; r < cfg.replicates; ++r) CHECK(mc.replicates[r].bandwidth == rep.selected[1][r]);
}

TEST_CASE("rate fit") {
  const std::vector<RatePoint> pts{{13.0, 0.1001}, {17.0, 0.0458}, {20.0, 0.0261}};
  const auto fit = fit_rate(pts, 0.5);
  // Independent OLS on (T, ln e).
  double mt = 0, my = 0;
  for (auto& p : pts) {
    mt += p.horizon / 3;
    my += std::log(p.mean_error) / 3;
  }
  double sxy = 0, sxx = 0;
  for (auto& p : pts) {
    sxy += (p.horizon - mt) * (std::log(p.mean_error) - my);
    sxx += (p.horizon - mt) * (p.horizon - mt);
  }
  CHECK(fit.slope == doctest::Approx(sxy / sxx).epsilon(1e-12));
  CHECK(fit.slope == doctest::Approx(-0.19222).epsilon(1e-4));
  CHECK(fit.intercept == doctest::Approx(my - fit.slope * mt).epsilon(1e-12));
  CHECK(fit.theoretical_slope == doctest::Approx(-1.0 / 6.0));

  const std::vector<RatePoint> flat{{13.0, 0.1}, {17.0, 0.1}, {20.0, 0.1}};
  CHECK(fit_rate(flat, 0.5).slope == doctest::Approx(0.0).scale(1.0));
  const std::vector<RatePoint> one{{13.0, 0.1}};
  CHECK_THROWS_AS(fit_rate(one, 0.5), InvalidArgument);
  const std::vector<RatePoint> bad{{13.0, 0.1}, {17.0, 0.0}};
  CHECK_THROWS_AS(fit_rate(bad, 0.5), InvalidArgument);
}

TEST_CASE("time grid") {
  const auto g = time_grid(6.0, 0.36, 24.0);
  REQUIRE(g.size() == 51);
  CHECK(g.front() == 6.0);
  CHECK(g.back() == 24.0);
  CHECK(g[1] == doctest::Approx(6.36));
  CHECK(std::is_sorted(g.begin(), g.end()));
  CHECK(time_grid(0.0, 1.0, 2.5) == std::vector<double>{0.0, 1.0, 2.0, 2.5});
  CHECK(time_grid(0.0, 1.0, 2.4) == std::vector<double>{0.0, 1.0, 2.0, 2.4});
  CHECK(time_grid(3.0, 1.0, 3.0) == std::vector<double>{3.0});
  CHECK_THROWS_AS(time_grid(1.0, 0.0, 2.0), InvalidArgument);
}

TEST_CASE("mean age experiment") {
  MeanAgeConfig cfg;
  cfg.times = time_grid(2.0, 2.0, 12.0);
  cfg.division_rate = 0.5;
  cfg.n_trees = 8;
  cfg.threads = 1;
  cfg.beta_params = {0.5, 2.0};

  SUBCASE("no growth drives the mean age to zero") {
    cfg.growth_rate = 0.0;
    const auto rep = run_mean_age_experiment(cfg);
    REQUIRE(rep.rows.size() == cfg.times.size() * 2);
    for (const auto& row : rep.rows) {
      CHECK(row.mean_of_means <= 1.0 + 1e-12);
      if (row.time == 12.0) CHECK(row.mean_of_means < 0.05);
    }
  }
  SUBCASE("rows are consistent and reproducible") {
    const auto a = run_mean_age_experiment(cfg);
    cfg.threads = 2;
    const auto b = run_mean_age_experiment(cfg);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
      CHECK(a.rows[i].mean_of_means == b.rows[i].mean_of_means);
      CHECK(a.rows[i].q25_of_means <= a.rows[i].q75_of_means);
      CHECK(a.rows[i].mean_within_q25 <= a.rows[i].mean_within_q75);
    }
    REQUIRE(a.spreads.size() == 2);
    for (const auto& s : a.spreads) {
      double within = 0.0, mean = 0.0;
      std::size_t n = 0;
      for (const auto& r : a.rows)
        if (r.a == s.a) {
          within += r.mean_within_q75 - r.mean_within_q25;
          mean += r.mean_of_means;
          ++n;
        }
      CHECK(s.within_spread == doctest::Approx(within / n));
      CHECK(s.mean_age == doctest::Approx(mean / n));
    }
  }
  SUBCASE("invalid configurations") {
    cfg.times = {};
    CHECK_THROWS_AS(run_mean_age_experiment(cfg), InvalidArgument);
  }
}

TEST_CASE("N_T check report") {
  NtCheckConfig cfg;
  cfg.n0 = 2;
  cfg.replicates = 4000;
  cfg.threads = 1;
  const auto rep = run_nt_check(cfg);
  CHECK(rep.mean_theory == doctest::Approx(2.0 * std::exp(1.0)));
  CHECK(std::abs(rep.z_mean) < 4.0);
  CHECK(std::abs(rep.z_inv) < 4.0);
  std::uint64_t total = 0;
  double expected = 0.0;
  for (const auto& b : rep.bins) {
    total += b.observed;
    expected += b.expected;
    CHECK(b.expected >= 5.0);
  }
  CHECK(total == cfg.replicates);
  CHECK(expected == doctest::Approx(cfg.replicates).epsilon(1e-9));
  CHECK(rep.bins.front().lo == 2);
  CHECK(rep.bins.back().hi == UINT64_MAX);
  CHECK(rep.dof + 1 == rep.bins.size());
  double chi2 = 0.0;
  for (const auto& b : rep.bins) chi2 += (b.observed - b.expected) * (b.observed - b.expected) / b.expected;
  CHECK(rep.chi2 == doctest::Approx(chi2));
  CHECK(rep.p_value > 0.0);
  CHECK(rep.p_value <= 1.0);

  cfg.n0 = 0;
  CHECK_THROWS_AS(run_nt_check(cfg), InvalidArgument);
}

TEST_CASE("parallel_for") {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));

  std::atomic<int> ran{0};
  CHECK_THROWS_AS(parallel_for(100, 3,
                               [&](std::size_t i) {
                                 ++ran;
                                 if (i == 17) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
  parallel_for(0, 2, [](std::size_t) { FAIL("no work expected"); });
}
