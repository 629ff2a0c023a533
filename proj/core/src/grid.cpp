#include "divkernel/grid.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "divkernel/errors.hpp"

namespace divkernel {

using detail::require;

void EvaluationGrid::validate() const {
  require(std::isfinite(lo) && std::isfinite(hi), "grid bounds must be finite");
  require(lo < 0.0 && hi > 1.0, "grid must strictly contain (0, 1)");
  require(n_points >= 2, "grid needs at least two points");
}

std::vector<double> EvaluationGrid::points() const {
  std::vector<double> out(n_points);
  for (std::size_t i = 0; i < n_points; ++i) out[i] = point(i);
  return out;
}

bool EvaluationGrid::is_symmetric() const { return std::abs(lo + hi - 1.0) <= 1e-12; }

double trapezoid(std::span<const double> values, double spacing) {
  if (values.size() < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 1; i + 1 < values.size(); ++i) sum += values[i];
  sum += 0.5 * (values.front() + values.back());
  return sum * spacing;
}

BandwidthGrid BandwidthGrid::for_sample(std::uint64_t m_t, double delta, std::uint32_t cap,
                                        std::uint32_t dmax_floor) {
  require(std::isfinite(delta) && delta > 0.0, "delta must be positive");
  require(cap >= 1, "bandwidth cap must be at least 1");
  require(dmax_floor >= 1, "dmax_floor must be at least 1");
  const double raw = std::floor(delta * static_cast<double>(m_t));
  auto dmax = static_cast<std::uint32_t>(std::clamp(raw, 1.0, static_cast<double>(cap)));
  const auto small = std::min<std::uint64_t>({dmax_floor, std::max<std::uint64_t>(m_t, 1), cap});
  dmax = std::max(dmax, static_cast<std::uint32_t>(small));
  BandwidthGrid h;
  h.delta = delta;
  h.cap = cap;
  h.dmax_floor = dmax_floor;
  h.values.reserve(dmax);
  for (std::uint32_t d = 1; d <= dmax; ++d) h.values.push_back(1.0 / d);
  return h;
}

BandwidthGrid BandwidthGrid::from_values(std::vector<double> values) {
  require(!values.empty(), "bandwidth grid must be nonempty");
  std::sort(values.begin(), values.end(), std::greater<>());
  for (std::size_t i = 0; i < values.size(); ++i) {
    require(std::isfinite(values[i]) && values[i] > 0.0, "bandwidths must be positive");
    if (i > 0) require(values[i] < values[i - 1], "bandwidths must be distinct");
  }
  BandwidthGrid h;
  h.values = std::move(values);
  h.cap = static_cast<std::uint32_t>(h.values.size());
  return h;
}

}  // namespace divkernel
