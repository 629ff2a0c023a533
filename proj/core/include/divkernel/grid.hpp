#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace divkernel {

/// Uniform evaluation grid. Must strictly contain (0, 1).
struct EvaluationGrid {
  double lo = -0.5;
  double hi = 1.5;
  std::size_t n_points = 2001;

  void validate() const;
  double spacing() const { return (hi - lo) / static_cast<double>(n_points - 1); }
  double point(std::size_t i) const { return lo + static_cast<double>(i) * spacing(); }
  std::vector<double> points() const;
  /// lo + hi == 1, so point(i) and point(n - 1 - i) mirror each other about 1/2.
  bool is_symmetric() const;

  friend bool operator==(const EvaluationGrid&, const EvaluationGrid&) = default;
};

/// Function tabulated on an EvaluationGrid.
struct GridFunction {
  EvaluationGrid grid;
  std::vector<double> values;
};

/// Composite trapezoid rule for uniformly spaced samples.
double trapezoid(std::span<const double> values, double spacing);

/// Candidate bandwidths {1, 1/2, ..., 1/dmax}, dmax = min(floor(delta * m_t), cap),
/// raised to min(dmax_floor, m_t, cap) for small samples and to at least 1.
struct BandwidthGrid {
  std::vector<double> values;  // strictly decreasing
  double delta = 0.0;
  std::uint32_t cap = 0;
  std::uint32_t dmax_floor = 1;

  static BandwidthGrid for_sample(std::uint64_t m_t, double delta, std::uint32_t cap,
                                  std::uint32_t dmax_floor = 1);
  /// Explicit candidate list; sorted decreasing, duplicates rejected.
  static BandwidthGrid from_values(std::vector<double> values);

  std::size_t size() const { return values.size(); }
  double smallest() const { return values.back(); }
  double largest() const { return values.front(); }
};

}  // namespace divkernel
