#include "divkernel/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include <boost/math/special_functions/gamma.hpp>

#include "divkernel/analytics.hpp"
#include "divkernel/errors.hpp"
#include "divkernel/rng.hpp"

namespace divkernel::experiments {

using detail::require;
using estimation::BetaFit;
using estimation::DensityEstimate;
using estimation::KernelSmoother;
using estimation::Sample;

void ExperimentConfig::validate() const {
  require(n0 >= 1, "n0 must be at least 1");
  require(std::isfinite(division_rate) && division_rate > 0.0, "division_rate must be positive");
  require(std::isfinite(growth_rate) && growth_rate >= 0.0, "growth_rate must be nonnegative");
  require(std::isfinite(initial_toxicity) && initial_toxicity >= 0.0,
          "initial_toxicity must be nonnegative");
  require(!horizons.empty(), "at least one horizon is required");
  for (double t : horizons) require(std::isfinite(t) && t > 0.0, "horizons must be positive");
  require(!methods.empty(), "at least one method is required");
  for (Method m : methods) require(m != Method::Fixed, "'Fixed' is not a selection method");
  require(replicates >= 1, "replicates must be at least 1");
  require(std::isfinite(epsilon) && 1.0 + epsilon > 0.0, "epsilon must exceed -1");
  require(std::isfinite(delta) && delta > 0.0, "delta must be positive");
  require(cap >= 1, "cap must be at least 1");
  require(dmax_floor >= 1, "dmax_floor must be at least 1");
  grid.validate();
}

bool ExperimentConfig::wants(Method m) const {
  return std::find(methods.begin(), methods.end(), m) != methods.end();
}

void MeanAgeConfig::validate() const {
  require(n0 >= 1, "n0 must be at least 1");
  require(std::isfinite(division_rate) && division_rate > 0.0, "division_rate must be positive");
  require(std::isfinite(growth_rate) && growth_rate >= 0.0, "growth_rate must be nonnegative");
  require(std::isfinite(initial_toxicity) && initial_toxicity >= 0.0,
          "initial_toxicity must be nonnegative");
  require(!times.empty(), "mean-age experiment needs at least one time");
  for (std::size_t i = 0; i < times.size(); ++i) {
    require(std::isfinite(times[i]) && times[i] >= 0.0, "times must be nonnegative");
    if (i > 0) require(times[i] >= times[i - 1], "times must be sorted");
  }
  require(!beta_params.empty(), "at least one Beta parameter is required");
  for (double a : beta_params) require(std::isfinite(a) && a > 0.0, "Beta parameters must be positive");
  require(n_trees >= 2, "n_trees must be at least 2");
}

const MethodSummary& McReport::at(double horizon, Method method) const {
  for (const auto& s : summary)
    if (s.horizon == horizon && s.method == method) return s;
  throw InvalidArgument("report has no row for method " + std::string(estimation::to_string(method)));
}

MethodSummary summarize(double horizon, Method method, std::span<const ReplicateResult> rows) {
  MethodSummary s;
  s.horizon = horizon;
  s.method = method;
  s.replicates = static_cast<std::uint32_t>(rows.size());
  require(!rows.empty(), "summarize: no replicates");
  const double m = static_cast<double>(rows.size());
  double sum = 0.0, bw = 0.0;
  for (const auto& r : rows) {
    sum += r.error;
    bw += r.bandwidth;
  }
  s.mean_error = sum / m;
  double ss = 0.0;
  for (const auto& r : rows) ss += (r.error - s.mean_error) * (r.error - s.mean_error);
  s.sd_error = std::sqrt(ss / m);
  s.mean_bandwidth = bw / m;
  return s;
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(count);
          return;
        }
      }
    });
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
}

std::uint64_t hash_sample(std::span<const double> values) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : values) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffu;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

ReplicateSample draw_replicate_sample(const ExperimentConfig& cfg, double horizon,
                                      std::uint32_t replicate) {
  sim::SimConfig sc;
  sc.n0 = cfg.n0;
  sc.division_rate = cfg.division_rate;
  sc.growth_rate = cfg.growth_rate;
  sc.horizon = horizon;
  sc.initial_toxicity = {cfg.initial_toxicity};
  sc.kernel = cfg.truth;
  ReplicateSample out;
  for (std::uint32_t attempt = 0; attempt < 100; ++attempt) {
    sc.seed = derive_seed(cfg.master_seed, {std::bit_cast<std::uint64_t>(horizon), replicate, attempt});
    out.gammas = sim::simulate_fractions(sc);
    if (out.gammas.size() >= 2) return out;
    ++out.redraws;
  }
  throw ConvergenceError("replicate " + std::to_string(replicate) +
                         ": 100 consecutive draws had fewer than two divisions");
}

namespace {

struct Candidates {
  std::vector<double> bandwidths;  // 1, 1/2, ..., 1/cap
};

Candidates oracle_candidates(std::uint32_t cap) {
  Candidates c;
  for (std::uint32_t d = 1; d <= cap; ++d) c.bandwidths.push_back(1.0 / d);
  return c;
}

struct MethodOutcome {
  double error = 0.0;
  double bandwidth = 0.0;
};

struct ReplicateOutcome {
  std::uint64_t m_t = 0;
  std::uint32_t redraws = 0;
  std::vector<MethodOutcome> by_method;  // aligned with the effective method list
  std::vector<double> oracle_ise;        // raw ISE per oracle candidate
  std::vector<double> oracle_error;      // reported error per oracle candidate
};

std::vector<Method> effective_methods(const ExperimentConfig& cfg) {
  std::vector<Method> out;
  for (Method m : cfg.methods) {
    if (m == Method::ML && !cfg.ml_applicable()) continue;
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  return out;
}

struct Context {
  explicit Context(const ExperimentConfig& c) : cfg(c) {}

  const ExperimentConfig& cfg;
  std::vector<Method> methods;
  KernelSpec kernel = gaussian_kernel();
  GridFunction truth;
  Candidates candidates;
  bool symmetrized = false;

  double error_of(std::vector<double> values) const {
    GridFunction f{cfg.grid, std::move(values)};
    if (symmetrized) {
      DensityEstimate e;
      static_cast<GridFunction&>(e) = std::move(f);
      return estimation::relative_error(estimation::symmetrize(e), truth);
    }
    return estimation::relative_error(f, truth);
  }
};

ReplicateOutcome evaluate_replicate(const Context& ctx, double horizon, std::uint32_t r) {
  const auto& cfg = ctx.cfg;
  ReplicateSample drawn = draw_replicate_sample(cfg, horizon, r);
  ReplicateOutcome out;
  out.redraws = drawn.redraws;
  const Sample sample(std::move(drawn.gammas));
  out.m_t = sample.m_t();
  const auto H = BandwidthGrid::for_sample(sample.m_t(), cfg.delta, cfg.cap, cfg.dmax_floor);

  const bool want_oracle = std::find(ctx.methods.begin(), ctx.methods.end(), Method::Oracle) != ctx.methods.end();
  const bool want_rot = std::find(ctx.methods.begin(), ctx.methods.end(), Method::RoT) != ctx.methods.end();
  const double rot_bw = want_rot ? estimation::rot_bandwidth(sample) : 1.0;
  double min_bw = H.smallest();
  double max_bw = KernelSmoother::widest_double(ctx.kernel, H.largest());
  if (want_oracle) min_bw = std::min(min_bw, ctx.candidates.bandwidths.back());
  if (want_rot) {
    min_bw = std::min(min_bw, rot_bw);
    max_bw = std::max(max_bw, rot_bw);
  }
  KernelSmoother smoother(sample, ctx.kernel, cfg.grid, min_bw, max_bw);

  if (want_oracle) {
    for (double l : ctx.candidates.bandwidths) {
      auto values = smoother.evaluate(l);
      GridFunction f{cfg.grid, values};
      out.oracle_ise.push_back(estimation::integrated_squared_error(f, ctx.truth));
      out.oracle_error.push_back(ctx.error_of(std::move(values)));
    }
  }

  for (Method m : ctx.methods) {
    MethodOutcome mo;
    switch (m) {
      case Method::GL: {
        const auto table = estimation::build_gl_table(smoother, H);
        const auto choice = estimation::gl_choose(table, cfg.epsilon);
        mo.bandwidth = choice.bandwidth;
        mo.error = ctx.error_of(smoother.evaluate(choice.bandwidth));
        break;
      }
      case Method::CV: {
        auto est = estimation::cv_select(smoother, H);
        mo.bandwidth = est.bandwidth;
        mo.error = ctx.error_of(std::move(est.values));
        break;
      }
      case Method::RoT:
        mo.bandwidth = rot_bw;
        mo.error = ctx.error_of(smoother.evaluate(rot_bw));
        break;
      case Method::ML: {
        const BetaFit fit = estimation::beta_mle(sample);
        const auto fitted = estimation::tabulate(DivisionKernelModel::beta(fit.a), cfg.grid);
        mo.bandwidth = estimation::kNaN;
        mo.error = ctx.error_of(fitted.values);
        break;
      }
      case Method::Oracle:
        if (cfg.oracle_mode == OracleMode::PerSample) {
          const auto best = static_cast<std::size_t>(
              std::min_element(out.oracle_ise.begin(), out.oracle_ise.end()) - out.oracle_ise.begin());
          mo.bandwidth = ctx.candidates.bandwidths[best];
          mo.error = out.oracle_error[best];
        }
        break;  // Monte Carlo mode is resolved after all replicates
      case Method::Fixed:
        break;
    }
    out.by_method.push_back(mo);
  }
  return out;
}

McReport run_experiment(const ExperimentConfig& cfg, bool symmetrized) {
  cfg.validate();
  if (symmetrized) require(cfg.grid.is_symmetric(), "symmetrized experiment needs a symmetric grid");
  Context ctx(cfg);
  ctx.methods = effective_methods(cfg);
  ctx.truth = estimation::tabulate(cfg.truth, cfg.grid);
  ctx.candidates = oracle_candidates(cfg.cap);
  ctx.symmetrized = symmetrized;

  McReport report;
  report.symmetrized = symmetrized;
  for (double horizon : cfg.horizons) {
    std::vector<ReplicateOutcome> outcomes(cfg.replicates);
    parallel_for(cfg.replicates, cfg.threads, [&](std::size_t r) {
      outcomes[r] = evaluate_replicate(ctx, horizon, static_cast<std::uint32_t>(r));
    });

    std::size_t oracle_index = 0;
    if (cfg.oracle_mode == OracleMode::MonteCarlo && cfg.wants(Method::Oracle)) {
      std::vector<std::vector<double>> ise;
      ise.reserve(outcomes.size());
      for (auto& o : outcomes) ise.push_back(o.oracle_ise);
      oracle_index = estimation::mc_oracle_index(ise);
    }

    for (std::size_t k = 0; k < ctx.methods.size(); ++k) {
      const Method m = ctx.methods[k];
      std::vector<ReplicateResult> rows;
      rows.reserve(outcomes.size());
      for (std::size_t r = 0; r < outcomes.size(); ++r) {
        const auto& o = outcomes[r];
        ReplicateResult row{horizon, static_cast<std::uint32_t>(r), m, o.by_method[k].error,
                            o.by_method[k].bandwidth, o.m_t};
        if (m == Method::Oracle && cfg.oracle_mode == OracleMode::MonteCarlo) {
          row.error = o.oracle_error[oracle_index];
          row.bandwidth = ctx.candidates.bandwidths[oracle_index];
        }
        rows.push_back(row);
      }
      report.summary.push_back(summarize(horizon, m, rows));
      report.replicates.insert(report.replicates.end(), rows.begin(), rows.end());
    }
    for (const auto& o : outcomes) report.redraws += o.redraws;
  }
  return report;
}

}  // namespace

McReport run_mise_experiment(const ExperimentConfig& cfg) { return run_experiment(cfg, false); }

McReport run_symmetrized_experiment(const ExperimentConfig& cfg) { return run_experiment(cfg, true); }

CalibrationReport calibrate_epsilon(const ExperimentConfig& cfg, std::span<const double> epsilons) {
  cfg.validate();
  require(!epsilons.empty(), "calibrate_epsilon needs at least one epsilon");
  for (double e : epsilons) require(std::isfinite(e) && e > -1.0, "every epsilon must exceed -1");

  const double horizon = cfg.horizons.front();
  const KernelSpec kernel = gaussian_kernel();
  const GridFunction truth = estimation::tabulate(cfg.truth, cfg.grid);
  const Candidates candidates = oracle_candidates(cfg.cap);
  const double truth_norm = estimation::l2_norm(truth);

  struct Prepared {
    estimation::GlTable table;
    std::vector<double> ise;
    std::uint64_t hash = 0;
  };
  std::vector<Prepared> prepared(cfg.replicates);
  parallel_for(cfg.replicates, cfg.threads, [&](std::size_t r) {
    auto drawn = draw_replicate_sample(cfg, horizon, static_cast<std::uint32_t>(r));
    prepared[r].hash = hash_sample(drawn.gammas);
    const Sample sample(std::move(drawn.gammas));
    const auto H = BandwidthGrid::for_sample(sample.m_t(), cfg.delta, cfg.cap, cfg.dmax_floor);
    KernelSmoother smoother(sample, kernel, cfg.grid, candidates.bandwidths.back(),
                            KernelSmoother::widest_double(kernel, H.largest()));
    prepared[r].table = estimation::build_gl_table(smoother, H);
    for (double l : candidates.bandwidths) {
      GridFunction f{cfg.grid, smoother.evaluate(l)};
      prepared[r].ise.push_back(estimation::integrated_squared_error(f, truth));
    }
  });

  CalibrationReport report;
  report.horizon = horizon;
  std::vector<std::vector<double>> ise;
  for (const auto& p : prepared) {
    ise.push_back(p.ise);
    report.sample_hashes.push_back(p.hash);
  }
  const std::size_t oracle_index = estimation::mc_oracle_index(ise);
  report.oracle_bandwidth = candidates.bandwidths[oracle_index];

  const double m = static_cast<double>(cfg.replicates);
  for (double eps : epsilons) {
    EpsilonRow row;
    row.epsilon = eps;
    std::vector<double> chosen;
    for (const auto& p : prepared) {
      const auto choice = estimation::gl_choose(p.table, eps);
      // H is a prefix of the candidate list, so the indices coincide.
      const double ise_value = p.ise[choice.index];
      row.mise += ise_value;
      row.mean_rel_error += std::sqrt(ise_value) / truth_norm;
      row.mean_bandwidth += choice.bandwidth;
      row.mean_gap += choice.bandwidth - report.oracle_bandwidth;
      chosen.push_back(choice.bandwidth);
    }
    row.mise /= m;
    row.mean_rel_error /= m;
    row.mean_bandwidth /= m;
    row.mean_gap /= m;
    report.rows.push_back(row);
    report.selected.push_back(std::move(chosen));
  }
  return report;
}

RateFit fit_rate(std::span<const RatePoint> points, double division_rate, double smoothness) {
  require(points.size() >= 2, "fit_rate needs at least two horizons");
  require(smoothness > 0.0, "smoothness must be positive");
  RateFit fit;
  fit.points.assign(points.begin(), points.end());
  double mx = 0.0, my = 0.0;
  for (const auto& p : points) {
    require(p.mean_error > 0.0, "fit_rate needs positive errors");
    mx += p.horizon;
    my += std::log(p.mean_error);
  }
  const double n = static_cast<double>(points.size());
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (const auto& p : points) {
    sxy += (p.horizon - mx) * (std::log(p.mean_error) - my);
    sxx += (p.horizon - mx) * (p.horizon - mx);
  }
  require(sxx > 0.0, "fit_rate needs at least two distinct horizons");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.theoretical_slope = -smoothness * division_rate / (2.0 * smoothness + 1.0);
  return fit;
}

RateResult fit_rate(const ExperimentConfig& cfg, double smoothness) {
  require(cfg.horizons.size() >= 2, "fit_rate needs at least two horizons");
  RateResult result;
  result.report = run_mise_experiment(cfg);
  for (Method m : effective_methods(cfg)) {
    std::vector<RatePoint> points;
    for (double t : cfg.horizons) points.push_back({t, result.report.at(t, m).mean_error});
    RateFit fit = fit_rate(points, cfg.division_rate, smoothness);
    fit.method = m;
    result.fits.push_back(std::move(fit));
  }
  return result;
}

void NtCheckConfig::validate() const {
  require(n0 >= 1, "n0 must be at least 1");
  require(std::isfinite(division_rate) && division_rate > 0.0, "R must be positive");
  require(std::isfinite(horizon) && horizon > 0.0, "T must be positive");
  require(replicates >= 2, "replicates must be at least 2");
}

NtCheckReport run_nt_check(const NtCheckConfig& cfg) {
  cfg.validate();
  const analytics::PopulationLaw law{cfg.n0, cfg.division_rate, cfg.horizon};
  sim::SimConfig sc;
  sc.n0 = cfg.n0;
  sc.division_rate = cfg.division_rate;
  sc.growth_rate = 0.0;
  sc.horizon = cfg.horizon;
  std::vector<std::uint64_t> counts(cfg.replicates);
  parallel_for(cfg.replicates, cfg.threads, [&](std::size_t r) {
    sim::SimConfig local = sc;
    local.seed = derive_seed(cfg.master_seed, {r});
    counts[r] = cfg.n0 + sim::simulate_fractions(local).size();
  });

  NtCheckReport rep;
  rep.config = cfg;
  const double m = cfg.replicates;
  double s1 = 0.0, s2 = 0.0, i1 = 0.0, i2 = 0.0;
  for (auto n : counts) {
    const double x = static_cast<double>(n);
    s1 += x;
    s2 += x * x;
    i1 += 1.0 / x;
    i2 += 1.0 / (x * x);
  }
  rep.mean_sim = s1 / m;
  rep.mean_se = std::sqrt(std::max(0.0, (s2 / m - rep.mean_sim * rep.mean_sim) * m / (m - 1.0)) / m);
  rep.inv_sim = i1 / m;
  rep.inv_se = std::sqrt(std::max(0.0, (i2 / m - rep.inv_sim * rep.inv_sim) * m / (m - 1.0)) / m);
  rep.mean_theory = analytics::nt_mean(law);
  rep.inv_theory = analytics::inv_nt_expectation(law);
  rep.z_mean = rep.mean_se > 0.0 ? (rep.mean_sim - rep.mean_theory) / rep.mean_se : 0.0;
  rep.z_inv = rep.inv_se > 0.0 ? (rep.inv_sim - rep.inv_theory) / rep.inv_se : 0.0;

  // Bins of consecutive values, each expecting at least 5 draws; the last is an open tail.
  constexpr double kMinExpected = 5.0;
  double used = 0.0;
  NtCheckBin cur{cfg.n0, cfg.n0, 0, 0.0};
  for (std::uint64_t n = cfg.n0;; ++n) {
    const double e = m * analytics::nt_pmf(law, n);
    cur.hi = n;
    cur.expected += e;
    if (m - used - cur.expected < kMinExpected) break;
    if (cur.expected >= kMinExpected) {
      used += cur.expected;
      rep.bins.push_back(cur);
      cur = NtCheckBin{n + 1, n + 1, 0, 0.0};
    }
  }
  cur.hi = std::numeric_limits<std::uint64_t>::max();
  cur.expected = m - used;
  if (cur.expected < kMinExpected && !rep.bins.empty()) {
    rep.bins.back().hi = cur.hi;
    rep.bins.back().expected += cur.expected;
  } else {
    rep.bins.push_back(cur);
  }
  for (auto n : counts) {
    for (auto& b : rep.bins) {
      if (n >= b.lo && n <= b.hi) {
        ++b.observed;
        break;
      }
    }
  }
  for (const auto& b : rep.bins) {
    const double d = static_cast<double>(b.observed) - b.expected;
    rep.chi2 += d * d / b.expected;
  }
  rep.dof = static_cast<std::uint32_t>(rep.bins.size() - 1);
  rep.p_value = rep.dof == 0 ? 1.0 : boost::math::gamma_q(0.5 * rep.dof, 0.5 * rep.chi2);
  return rep;
}

std::vector<double> time_grid(double start, double step, double end) {
  require(std::isfinite(start) && std::isfinite(step) && std::isfinite(end), "time grid must be finite");
  require(step > 0.0 && end >= start, "time grid needs step > 0 and end >= start");
  const auto n = static_cast<std::size_t>(std::floor((end - start) / step + 1e-9));
  std::vector<double> out;
  for (std::size_t i = 0; i <= n; ++i) out.push_back(start + static_cast<double>(i) * step);
  if (std::abs(out.back() - end) <= 1e-9 * step)
    out.back() = end;
  else
    out.push_back(end);
  return out;
}

MeanAgeReport run_mean_age_experiment(const MeanAgeConfig& cfg) {
  cfg.validate();
  const std::size_t n_a = cfg.beta_params.size();
  const std::size_t n_t = cfg.times.size();
  std::vector<std::vector<sim::Snapshot>> snaps(n_a * cfg.n_trees);
  parallel_for(snaps.size(), cfg.threads, [&](std::size_t job) {
    const std::size_t ai = job / cfg.n_trees;
    const std::size_t tree = job % cfg.n_trees;
    sim::SimConfig sc;
    sc.n0 = cfg.n0;
    sc.division_rate = cfg.division_rate;
    sc.growth_rate = cfg.growth_rate;
    sc.horizon = cfg.times.back();
    sc.initial_toxicity = {cfg.initial_toxicity};
    sc.kernel = DivisionKernelModel::beta(cfg.beta_params[ai]);
    sc.seed = derive_seed(cfg.master_seed, {tree});
    sc.snapshot_times = cfg.times;
    snaps[job] = sim::simulate(sc).snapshots;
  });

  MeanAgeReport report;
  const double trees = cfg.n_trees;
  for (std::size_t ai = 0; ai < n_a; ++ai) {
    SpreadRow spread;
    spread.a = cfg.beta_params[ai];
    for (std::size_t ti = 0; ti < n_t; ++ti) {
      MeanAgeRow row;
      row.a = cfg.beta_params[ai];
      row.time = cfg.times[ti];
      std::vector<double> means;
      for (std::size_t k = 0; k < cfg.n_trees; ++k) {
        const auto& s = snaps[ai * cfg.n_trees + k][ti];
        means.push_back(s.mean_age);
        row.mean_of_means += s.mean_age;
        row.mean_within_q25 += s.q25;
        row.mean_within_q75 += s.q75;
      }
      row.mean_of_means /= trees;
      row.mean_within_q25 /= trees;
      row.mean_within_q75 /= trees;
      row.q25_of_means = sim::quantile_inplace(means, 0.25);
      row.q75_of_means = sim::quantile_inplace(means, 0.75);
      spread.within_spread += row.mean_within_q75 - row.mean_within_q25;
      spread.across_spread += row.q75_of_means - row.q25_of_means;
      spread.mean_age += row.mean_of_means;
      report.rows.push_back(row);
    }
    spread.within_spread /= static_cast<double>(n_t);
    spread.across_spread /= static_cast<double>(n_t);
    spread.mean_age /= static_cast<double>(n_t);
    report.spreads.push_back(spread);
  }
  return report;
}

}  // namespace divkernel::experiments
