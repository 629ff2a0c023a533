#include "divkernel/simulation.hpp"

#include <algorithm>
#include <cmath>

#include "divkernel/errors.hpp"

namespace divkernel::sim {

using detail::require;

bool CellLabel::is_ancestor_of(const CellLabel& other) const {
  return root_index == other.root_index && path.size() < other.path.size() &&
         other.path.compare(0, path.size(), path) == 0;
}

std::string CellLabel::to_string() const { return std::to_string(root_index) + ":" + path; }

void SimConfig::validate() const {
  require(n0 >= 1, "n0 must be at least 1");
  require(std::isfinite(division_rate) && division_rate > 0.0, "division_rate must be positive");
  require(std::isfinite(growth_rate) && growth_rate >= 0.0, "growth_rate must be nonnegative");
  require(std::isfinite(horizon) && horizon >= 0.0, "horizon must be nonnegative");
  require(initial_toxicity.size() == 1 || initial_toxicity.size() == n0,
          "initial_toxicity needs one value or one per founder");
  for (double x : initial_toxicity)
    require(std::isfinite(x) && x >= 0.0, "initial toxicity must be nonnegative");
  for (std::size_t i = 0; i < snapshot_times.size(); ++i) {
    const double t = snapshot_times[i];
    require(std::isfinite(t) && t >= 0.0 && t <= horizon, "snapshot time outside [0, horizon]");
    if (i > 0) require(t >= snapshot_times[i - 1], "snapshot times must be sorted");
  }
}

double SimConfig::founder_toxicity(std::size_t i) const {
  return initial_toxicity.size() == 1 ? initial_toxicity.front() : initial_toxicity[i];
}

std::vector<double> Trajectory::gammas() const {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.gamma);
  return out;
}

double quantile_inplace(std::vector<double>& values, double p) {
  require(!values.empty(), "quantile of empty sample");
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
  const double a = values[lo];
  if (frac == 0.0 || lo + 1 >= values.size()) return a;
  const double b = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lo) + 1, values.end());
  return a + frac * (b - a);
}

namespace {

// Each living cell stores its toxicity at the instant it was last set; its
// current toxicity is that value plus growth_rate times the elapsed time.
struct Population {
  std::vector<double> toxicity_at_set;
  std::vector<double> set_time;
  std::vector<CellLabel> labels;

  double toxicity(std::size_t i, double t, double alpha) const {
    return toxicity_at_set[i] + alpha * (t - set_time[i]);
  }
};

Snapshot take_snapshot(const Population& pop, double t, double alpha, std::vector<double>& scratch) {
  scratch.resize(pop.toxicity_at_set.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scratch.size(); ++i) {
    scratch[i] = pop.toxicity(i, t, alpha);
    total += scratch[i];
  }
  Snapshot s;
  s.time = t;
  s.n_alive = scratch.size();
  s.total_toxicity = total;
  s.mean_age = total / static_cast<double>(scratch.size());
  s.q25 = quantile_inplace(scratch, 0.25);
  s.q75 = quantile_inplace(scratch, 0.75);
  return s;
}

template <typename OnDivision>
Population run(const SimConfig& config, bool track_labels, std::vector<Snapshot>* snapshots,
               OnDivision&& on_division) {
  config.validate();
  Pcg32 rng(config.seed, mix64(config.seed ^ 0xa02bdbf7bb3c0a7ULL));
  const double alpha = config.growth_rate;

  Population pop;
  const std::size_t reserve = static_cast<std::size_t>(
      std::min(1.0e6, 2.0 * config.n0 * std::exp(config.division_rate * config.horizon)));
  pop.toxicity_at_set.reserve(reserve);
  pop.set_time.reserve(reserve);
  for (std::uint32_t i = 0; i < config.n0; ++i) {
    pop.toxicity_at_set.push_back(config.founder_toxicity(i));
    pop.set_time.push_back(0.0);
    if (track_labels) pop.labels.push_back(CellLabel{i, ""});
  }

  std::vector<double> scratch;
  std::size_t next_snapshot = 0;
  auto flush_snapshots_before = [&](double t_limit, bool inclusive) {
    if (snapshots == nullptr) return;
    while (next_snapshot < config.snapshot_times.size()) {
      const double s = config.snapshot_times[next_snapshot];
      if (inclusive ? s > t_limit : s >= t_limit) break;
      snapshots->push_back(take_snapshot(pop, s, alpha, scratch));
      ++next_snapshot;
    }
  };

  double t = 0.0;
  for (;;) {
    const auto n = static_cast<double>(pop.set_time.size());
    const double dt = rng.exponential(config.division_rate * n);
    if (t + dt > config.horizon) break;
    t += dt;
    flush_snapshots_before(t, false);

    const auto idx = static_cast<std::size_t>(rng.below(pop.set_time.size()));
    const double x = pop.toxicity(idx, t, alpha);
    const double gamma = config.kernel.sample(rng);
    const double share_one = gamma * x;
    const double share_zero = x - share_one;

    DivisionRecord rec;
    rec.time = t;
    rec.parent_toxicity = x;
    rec.gamma = gamma;
    if (track_labels) {
      rec.parent = pop.labels[idx];
      pop.labels.push_back(pop.labels[idx].child('1'));
      pop.labels[idx] = pop.labels[idx].child('0');
    }
    on_division(std::move(rec));

    pop.toxicity_at_set[idx] = share_zero;
    pop.set_time[idx] = t;
    pop.toxicity_at_set.push_back(share_one);
    pop.set_time.push_back(t);
  }
  flush_snapshots_before(config.horizon, true);
  return pop;
}

}  // namespace

Trajectory simulate(const SimConfig& config) {
  Trajectory traj;
  traj.config = config;
  Population pop = run(config, config.genealogy, &traj.snapshots,
                       [&traj](DivisionRecord&& r) { traj.records.push_back(std::move(r)); });
  traj.final_toxicity.resize(pop.set_time.size());
  for (std::size_t i = 0; i < pop.set_time.size(); ++i)
    traj.final_toxicity[i] = pop.toxicity(i, config.horizon, config.growth_rate);
  traj.final_labels = std::move(pop.labels);
  return traj;
}

std::vector<double> simulate_fractions(const SimConfig& config) {
  std::vector<double> gammas;
  run(config, false, nullptr, [&gammas](DivisionRecord&& r) { gammas.push_back(r.gamma); });
  return gammas;
}

std::vector<MeanAgePoint> mean_age_series(const Trajectory& traj, std::span<const double> times) {
  const SimConfig& cfg = traj.config;
  for (std::size_t i = 0; i < times.size(); ++i) {
    require(times[i] >= 0.0 && times[i] <= cfg.horizon, "mean_age_series: time outside [0, T]");
    if (i > 0) require(times[i] >= times[i - 1], "mean_age_series: times must be sorted");
  }
  double initial_total = 0.0;
  for (std::uint32_t i = 0; i < cfg.n0; ++i) initial_total += cfg.founder_toxicity(i);

  std::vector<MeanAgePoint> out;
  out.reserve(times.size());
  double integral = 0.0;  // integral of N_s ds up to `last`
  double last = 0.0;
  double n = cfg.n0;
  std::size_t k = 0;
  for (double t : times) {
    while (k < traj.records.size() && traj.records[k].time <= t) {
      integral += n * (traj.records[k].time - last);
      last = traj.records[k].time;
      n += 1.0;
      ++k;
    }
    const double total = initial_total + cfg.growth_rate * (integral + n * (t - last));
    out.push_back({t, total / n});
  }
  return out;
}

}  // namespace divkernel::sim
