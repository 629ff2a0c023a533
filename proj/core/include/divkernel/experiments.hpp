#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "divkernel/estimation.hpp"
#include "divkernel/kernel_model.hpp"
#include "divkernel/simulation.hpp"

namespace divkernel::experiments {

using estimation::Method;

enum class OracleMode {
  MonteCarlo,  // one bandwidth for all replicates: argmin of the average ISE
  PerSample,   // each replicate's own ISE minimizer
};

struct ExperimentConfig {
  std::uint32_t n0 = 1;
  double division_rate = 0.5;
  double growth_rate = 0.35;
  double initial_toxicity = 1.0;
  std::vector<double> horizons{13.0};
  DivisionKernelModel truth = DivisionKernelModel::beta(2.0);
  std::vector<Method> methods{Method::GL, Method::Oracle, Method::CV, Method::RoT, Method::ML};
  std::uint32_t replicates = 100;
  double epsilon = -0.68;
  double delta = 0.05;
  std::uint32_t cap = 128;
  /// Smallest dmax for samples with at least that many divisions.
  std::uint32_t dmax_floor = 10;
  EvaluationGrid grid{};
  std::uint64_t master_seed = 20240611;
  OracleMode oracle_mode = OracleMode::MonteCarlo;
  /// Worker threads; 0 means hardware concurrency.
  unsigned threads = 0;

  void validate() const;
  bool wants(Method m) const;
  /// ML only applies to a symmetric Beta(a, a) truth.
  bool ml_applicable() const { return truth.as_beta() != nullptr; }
};

struct MethodSummary {
  double horizon = 0.0;
  Method method = Method::GL;
  double mean_error = 0.0;
  double sd_error = 0.0;
  double mean_bandwidth = 0.0;  // NaN for ML
  std::uint32_t replicates = 0;
};

struct ReplicateResult {
  double horizon = 0.0;
  std::uint32_t replicate = 0;
  Method method = Method::GL;
  double error = 0.0;
  double bandwidth = 0.0;
  std::uint64_t m_t = 0;
};

struct McReport {
  bool symmetrized = false;
  std::vector<MethodSummary> summary;     // horizon-major, methods in config order
  std::vector<ReplicateResult> replicates;
  std::uint32_t redraws = 0;              // replicates redrawn for M_T < 2

  const MethodSummary& at(double horizon, Method method) const;
};

/// Aggregates as reported: mean, population standard deviation (divide by M),
/// mean bandwidth, in replicate order.
MethodSummary summarize(double horizon, Method method, std::span<const ReplicateResult> rows);

/// Division fractions of one replicate. Replicates with fewer than two
/// divisions are redrawn from a fresh sub-seed; 100 consecutive failures
/// throw ConvergenceError.
struct ReplicateSample {
  std::vector<double> gammas;
  std::uint32_t redraws = 0;
};
ReplicateSample draw_replicate_sample(const ExperimentConfig& cfg, double horizon,
                                      std::uint32_t replicate);

/// FNV-1a over the bit patterns of the values.
std::uint64_t hash_sample(std::span<const double> values);

McReport run_mise_experiment(const ExperimentConfig& cfg);
/// Same replicates as run_mise_experiment; errors measured after symmetrization.
McReport run_symmetrized_experiment(const ExperimentConfig& cfg);

struct EpsilonRow {
  double epsilon = 0.0;
  double mise = 0.0;            // mean over replicates of ||h_hat - h||^2
  double mean_rel_error = 0.0;
  double mean_bandwidth = 0.0;
  double mean_gap = 0.0;        // mean of (selected - Monte Carlo oracle bandwidth)
};

struct CalibrationReport {
  double horizon = 0.0;
  double oracle_bandwidth = 0.0;
  std::vector<EpsilonRow> rows;
  std::vector<std::uint64_t> sample_hashes;          // one per replicate, shared by every epsilon
  std::vector<std::vector<double>> selected;         // selected[e][r]
};

/// GL over an epsilon grid on one shared set of replicate samples (first horizon).
CalibrationReport calibrate_epsilon(const ExperimentConfig& cfg, std::span<const double> epsilons);

struct RatePoint {
  double horizon;
  double mean_error;
};

struct RateFit {
  Method method = Method::GL;
  std::vector<RatePoint> points;
  double slope = 0.0;
  double intercept = 0.0;
  double theoretical_slope = 0.0;  // -beta R / (2 beta + 1)
};

/// OLS of log(mean error) on the horizon.
RateFit fit_rate(std::span<const RatePoint> points, double division_rate, double smoothness = 1.0);

struct RateResult {
  McReport report;
  std::vector<RateFit> fits;  // one per method in the config
};
RateResult fit_rate(const ExperimentConfig& cfg, double smoothness = 1.0);

struct MeanAgeConfig {
  std::uint32_t n0 = 1;
  double division_rate = 0.4;
  double growth_rate = 0.45;
  double initial_toxicity = 1.0;
  std::vector<double> times;         // sorted; the last one is the horizon
  std::vector<double> beta_params{2.0};
  std::uint32_t n_trees = 50;
  std::uint64_t master_seed = 20240611;
  unsigned threads = 0;

  void validate() const;
};

struct MeanAgeRow {
  double a = 0.0;
  double time = 0.0;
  double mean_of_means = 0.0;        // average over trees of the mean age
  double q25_of_means = 0.0;         // quartiles of the per-tree mean ages
  double q75_of_means = 0.0;
  double mean_within_q25 = 0.0;      // average over trees of within-tree quartiles
  double mean_within_q75 = 0.0;
};

struct SpreadRow {
  double a = 0.0;
  double within_spread = 0.0;        // time average of the mean within-tree Q75 - Q25
  double across_spread = 0.0;        // time average of Q75 - Q25 of the per-tree means
  double mean_age = 0.0;             // time average of the mean of means
};

struct MeanAgeReport {
  std::vector<MeanAgeRow> rows;
  std::vector<SpreadRow> spreads;
};

/// Trees are paired across `beta_params`: tree k uses the same seed for every a.
MeanAgeReport run_mean_age_experiment(const MeanAgeConfig& cfg);

struct NtCheckConfig {
  std::uint32_t n0 = 1;
  double division_rate = 1.0;
  double horizon = 1.0;
  std::uint32_t replicates = 10000;
  std::uint64_t master_seed = 20240611;
  unsigned threads = 0;

  void validate() const;
};

struct NtCheckBin {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;  // inclusive; UINT64_MAX for the pooled tail
  std::uint64_t observed = 0;
  double expected = 0.0;
};

struct NtCheckReport {
  NtCheckConfig config;
  double mean_sim = 0.0;
  double mean_se = 0.0;
  double mean_theory = 0.0;
  double z_mean = 0.0;
  double inv_sim = 0.0;
  double inv_se = 0.0;
  double inv_theory = 0.0;
  double z_inv = 0.0;
  double chi2 = 0.0;
  std::uint32_t dof = 0;
  double p_value = 0.0;
  std::vector<NtCheckBin> bins;  // adjacent counts pooled until each expects >= 5
};

/// Simulated N_T against its negative binomial law, mean and E[1/N_T].
NtCheckReport run_nt_check(const NtCheckConfig& cfg);

/// start, start + step, ..., end (the last point snapped to `end`).
std::vector<double> time_grid(double start, double step, double end);

/// Runs body(i) for i in [0, count) on up to `threads` workers; rethrows the
/// first exception after all workers stop.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace divkernel::experiments
