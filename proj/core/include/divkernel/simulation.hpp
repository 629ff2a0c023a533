#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "divkernel/kernel_model.hpp"

namespace divkernel::sim {

/// Ulam-Harris-Neveu label. Children of `path` are `path + '0'` and `path + '1'`.
struct CellLabel {
  std::uint32_t root_index = 0;
  std::string path;

  CellLabel child(char bit) const { return CellLabel{root_index, path + bit}; }
  bool is_ancestor_of(const CellLabel& other) const;
  /// "root:path", e.g. "0:0110"; the root itself is "0:".
  std::string to_string() const;

  friend bool operator==(const CellLabel&, const CellLabel&) = default;
};

struct SimConfig {
  std::uint32_t n0 = 1;
  double division_rate = 0.5;
  double growth_rate = 0.35;
  double horizon = 13.0;
  /// One entry per founder, or a single entry shared by every founder.
  std::vector<double> initial_toxicity{1.0};
  DivisionKernelModel kernel = DivisionKernelModel::beta(2.0);
  std::uint64_t seed = 0;
  /// Sorted times in [0, horizon] at which population statistics are recorded.
  std::vector<double> snapshot_times;
  bool genealogy = false;

  /// Throws InvalidArgument on any violated invariant.
  void validate() const;
  double founder_toxicity(std::size_t i) const;
};

struct DivisionRecord {
  double time = 0.0;
  std::optional<CellLabel> parent;  // only with genealogy tracking
  double parent_toxicity = 0.0;
  double gamma = 0.0;  // fraction carried by daughter "1"
};

struct Snapshot {
  double time = 0.0;
  std::uint64_t n_alive = 0;
  double mean_age = 0.0;
  double total_toxicity = 0.0;
  /// Within-population quartiles of the toxicities.
  double q25 = 0.0;
  double q75 = 0.0;
};

struct Trajectory {
  SimConfig config;
  std::vector<DivisionRecord> records;
  std::vector<double> final_toxicity;
  std::vector<CellLabel> final_labels;  // empty unless genealogy was requested
  std::vector<Snapshot> snapshots;

  std::uint64_t n_final() const { return final_toxicity.size(); }
  std::uint64_t m_t() const { return records.size(); }
  /// Division fractions in event order.
  std::vector<double> gammas() const;
};

/// Exact event-driven realization of the branching toxicity process.
/// Deterministic in config.seed; safe to call concurrently.
Trajectory simulate(const SimConfig& config);

/// Same law, but only the division fractions are kept. Uses the same random
/// stream as simulate() and so returns exactly simulate(config).gammas().
std::vector<double> simulate_fractions(const SimConfig& config);

struct MeanAgePoint {
  double time;
  double mean_age;
};

/// Mean toxicity of the living cells at each time, rebuilt from the event
/// times alone: splitting conserves toxicity, so the total at t is the
/// initial total plus growth_rate times the integral of N_s.
std::vector<MeanAgePoint> mean_age_series(const Trajectory& traj, std::span<const double> times);

/// Linear-interpolation quantile (type 7) of an unsorted sample; reorders it.
double quantile_inplace(std::vector<double>& values, double p);

}  // namespace divkernel::sim
