#include "divkernel/estimation.hpp"

#include <algorithm>
#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cctype>
#include <cmath>
#include <memory>
#include <numeric>
#include <optional>

#include "divkernel/errors.hpp"
#include "divkernel/special_functions.hpp"
#include "divkernel/spectral_kde.hpp"

namespace divkernel::estimation {

using detail::require;

std::string_view to_string(Method m) {
  switch (m) {
    case Method::GL: return "GL";
    case Method::Oracle: return "Oracle";
    case Method::CV: return "CV";
    case Method::RoT: return "RoT";
    case Method::ML: return "ML";
    case Method::Fixed: return "Fixed";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  std::string lower(name);
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "gl") return Method::GL;
  if (lower == "oracle") return Method::Oracle;
  if (lower == "cv") return Method::CV;
  if (lower == "rot") return Method::RoT;
  if (lower == "ml") return Method::ML;
  if (lower == "fixed") return Method::Fixed;
  throw InvalidArgument("unknown method '" + std::string(name) + "'");
}

Sample::Sample(std::vector<double> gammas) : gammas_(std::move(gammas)) {
  require(!gammas_.empty(), "sample is empty (no divisions observed)");
  for (double g : gammas_)
    require(g > 0.0 && g < 1.0, "sample values must lie strictly inside (0, 1)");
}

GridFunction tabulate(const DivisionKernelModel& model, const EvaluationGrid& grid) {
  grid.validate();
  GridFunction f{grid, std::vector<double>(grid.n_points)};
  for (std::size_t i = 0; i < grid.n_points; ++i) f.values[i] = model.density(grid.point(i));
  return f;
}

namespace {

// Sum_i w(x - data_i) for each grid x, restricted to |x - data_i| <= radius.
template <typename Weight>
std::vector<double> windowed_sum(std::span<const double> sorted, const EvaluationGrid& grid,
                                 double radius, Weight&& weight) {
  std::vector<double> out(grid.n_points, 0.0);
  const bool finite = std::isfinite(radius);
  for (std::size_t g = 0; g < grid.n_points; ++g) {
    const double x = grid.point(g);
    auto first = sorted.begin();
    auto last = sorted.end();
    if (finite) {
      first = std::lower_bound(sorted.begin(), sorted.end(), x - radius);
      last = std::upper_bound(first, sorted.end(), x + radius);
    }
    double acc = 0.0;
    for (auto it = first; it != last; ++it) acc += weight(x - *it);
    out[g] = acc;
  }
  return out;
}

std::vector<double> sorted_copy(const Sample& s) {
  std::vector<double> v(s.values().begin(), s.values().end());
  std::sort(v.begin(), v.end());
  return v;
}

std::vector<double> direct_kde_values(std::span<const double> sorted, const KernelSpec& kernel,
                                      double bandwidth, const EvaluationGrid& grid) {
  const double inv_n = 1.0 / static_cast<double>(sorted.size());
  auto values = windowed_sum(sorted, grid, kernel.effective_radius * bandwidth,
                             [&](double d) { return kernel.evaluate(d / bandwidth); });
  for (auto& v : values) v *= inv_n / bandwidth;
  return values;
}

// Tabulated K_l * K_l' for kernels without a closed-form self-convolution.
class ConvolvedKernel {
 public:
  ConvolvedKernel(const KernelSpec& kernel, double l1, double l2) {
    require(std::isfinite(kernel.effective_radius),
            "quadrature convolution needs a kernel with finite effective radius");
    radius_ = kernel.effective_radius * (l1 + l2);
    const double step = std::hypot(l1, l2) / 200.0;
    const auto nodes = static_cast<std::size_t>(std::ceil(2.0 * radius_ / step)) + 1;
    const double h = 2.0 * radius_ / static_cast<double>(nodes - 1);
    std::vector<double> table(nodes);
    for (std::size_t i = 0; i < nodes; ++i)
      table[i] = kernel_convolution_quadrature(kernel, l1, l2, -radius_ + static_cast<double>(i) * h);
    spline_ = std::make_unique<boost::math::interpolators::cardinal_cubic_b_spline<double>>(
        table.begin(), table.end(), -radius_, h);
  }

  double operator()(double z) const { return std::abs(z) >= radius_ ? 0.0 : (*spline_)(z); }
  double radius() const { return radius_; }

 private:
  double radius_ = 0.0;
  std::unique_ptr<boost::math::interpolators::cardinal_cubic_b_spline<double>> spline_;
};

std::vector<double> quadrature_double_kde_values(std::span<const double> sorted,
                                                 const KernelSpec& kernel, double l1, double l2,
                                                 const EvaluationGrid& grid) {
  ConvolvedKernel conv(kernel, l1, l2);
  auto values = windowed_sum(sorted, grid, conv.radius(), [&](double d) { return conv(d); });
  const double inv_n = 1.0 / static_cast<double>(sorted.size());
  for (auto& v : values) v *= inv_n;
  return values;
}

double squared_distance(std::span<const double> a, std::span<const double> b, double spacing) {
  double sum = 0.0;
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    sum += (i == 0 || i + 1 == n) ? 0.5 * d * d : d * d;
  }
  return sum * spacing;
}

double squared_norm(std::span<const double> a, double spacing) {
  double sum = 0.0;
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) sum += (i == 0 || i + 1 == n) ? 0.5 * a[i] * a[i] : a[i] * a[i];
  return sum * spacing;
}

DensityEstimate make_estimate(const EvaluationGrid& grid, std::vector<double> values, double bw,
                              Method method, std::uint64_t m_t) {
  DensityEstimate est;
  est.grid = grid;
  est.values = std::move(values);
  est.bandwidth = bw;
  est.method = method;
  est.m_t = m_t;
  return est;
}

void require_same_grid(const EvaluationGrid& a, const EvaluationGrid& b) {
  require(a == b, "functions are tabulated on different grids");
}

}  // namespace

KernelSmoother::KernelSmoother(const Sample& sample, const KernelSpec& kernel,
                               const EvaluationGrid& grid, double min_bandwidth,
                               double max_bandwidth)
    : kernel_(kernel), grid_(grid), sorted_(sorted_copy(sample)) {
  grid.validate();
  if (SpectralKde::supports(kernel))
    spectral_ = std::make_unique<SpectralKde>(sorted_, kernel, grid, min_bandwidth, max_bandwidth);
}

KernelSmoother::~KernelSmoother() = default;

std::vector<double> KernelSmoother::evaluate(double bandwidth) {
  if (spectral_) return spectral_->evaluate(bandwidth);
  return direct_kde_values(sorted_, kernel_, bandwidth, grid_);
}

std::vector<double> KernelSmoother::evaluate_double(double bandwidth, double inner_bandwidth) {
  if (kernel_.has_self_convolution())
    return evaluate(kernel_.self_convolution(bandwidth, inner_bandwidth));
  return quadrature_double_kde_values(sorted_, kernel_, bandwidth, inner_bandwidth, grid_);
}

double KernelSmoother::pair_sum(double bandwidth) const {
  if (spectral_) return spectral_->pair_sum(bandwidth);
  return loo_pair_sum_direct(Sample(sorted_), kernel_, bandwidth);
}

double KernelSmoother::widest_double(const KernelSpec& kernel, double bandwidth) {
  return kernel.has_self_convolution() ? kernel.self_convolution(bandwidth, bandwidth) : bandwidth;
}

DensityEstimate kde(const Sample& sample, const KernelSpec& kernel, double bandwidth,
                    const EvaluationGrid& grid) {
  require(std::isfinite(bandwidth) && bandwidth > 0.0, "bandwidth must be positive");
  grid.validate();
  const auto sorted = sorted_copy(sample);
  return make_estimate(grid, direct_kde_values(sorted, kernel, bandwidth, grid), bandwidth,
                       Method::Fixed, sample.m_t());
}

DensityEstimate double_kde(const Sample& sample, const KernelSpec& kernel, double bandwidth,
                           double inner_bandwidth, const EvaluationGrid& grid) {
  require(std::isfinite(bandwidth) && bandwidth > 0.0 && std::isfinite(inner_bandwidth) &&
              inner_bandwidth > 0.0,
          "bandwidths must be positive");
  grid.validate();
  const auto sorted = sorted_copy(sample);
  std::vector<double> values =
      kernel.has_self_convolution()
          ? direct_kde_values(sorted, kernel, kernel.self_convolution(bandwidth, inner_bandwidth), grid)
          : quadrature_double_kde_values(sorted, kernel, bandwidth, inner_bandwidth, grid);
  auto est = make_estimate(grid, std::move(values), bandwidth, Method::Fixed, sample.m_t());
  est.selector_mode = "double";
  return est;
}

double kernel_convolution_quadrature(const KernelSpec& kernel, double l1, double l2, double z) {
  const double r = kernel.effective_radius;
  double a = -r * l2, b = r * l2;
  if (std::isfinite(r)) {
    a = std::max(a, z - r * l1);
    b = std::min(b, z + r * l1);
    // A sliver at the edge of both supports carries no mass; bisecting it
    // down to ulp-sized pieces never meets the tolerance.
    if (b - a <= 1e-12 * (l1 + l2)) return 0.0;
  }
  auto integrand = [&](double u) { return kernel.scaled(z - u, l1) * kernel.scaled(u, l2); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, a, b, 12, 1e-13);
}

double l2_distance(const GridFunction& a, const GridFunction& b) {
  require_same_grid(a.grid, b.grid);
  require(a.values.size() == b.values.size() && a.values.size() == a.grid.n_points,
          "grid function size mismatch");
  return std::sqrt(squared_distance(a.values, b.values, a.grid.spacing()));
}

double l2_norm(const GridFunction& f) { return std::sqrt(squared_norm(f.values, f.grid.spacing())); }

GlTable build_gl_table(const Sample& sample, const KernelSpec& kernel, const BandwidthGrid& H,
                       const EvaluationGrid& grid) {
  require(H.size() > 0, "bandwidth grid is empty");
  KernelSmoother smoother(sample, kernel, grid, H.smallest(),
                          KernelSmoother::widest_double(kernel, H.largest()));
  return build_gl_table(smoother, H);
}

GlTable build_gl_table(KernelSmoother& smoother, const BandwidthGrid& H) {
  require(H.size() > 0, "bandwidth grid is empty");
  const EvaluationGrid& grid = smoother.grid();
  GlTable t;
  t.bandwidths = H.values;
  t.m_t = smoother.m_t();
  t.kernel_l1 = smoother.kernel().l1_norm;
  t.kernel_l2 = smoother.kernel().l2_norm;
  const std::size_t n = H.size();
  t.dist.assign(n, std::vector<double>(n, 0.0));

  std::vector<std::vector<double>> single(n);
  for (std::size_t j = 0; j < n; ++j) single[j] = smoother.evaluate(H.values[j]);

  const double dx = grid.spacing();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      // h_{l,l'} is symmetric in (l, l'), so one evaluation serves both orders.
      const auto both = smoother.evaluate_double(H.values[i], H.values[j]);
      t.dist[i][j] = std::sqrt(squared_distance(both, single[j], dx));
      t.dist[j][i] = std::sqrt(squared_distance(both, single[i], dx));
    }
  }
  return t;
}

GlChoice gl_choose(const GlTable& table, double epsilon) {
  require(std::isfinite(epsilon) && 1.0 + epsilon > 0.0, "GL requires 1 + epsilon > 0");
  const std::size_t n = table.bandwidths.size();
  require(n > 0, "bandwidth grid is empty");
  const double chi = (1.0 + epsilon) * (1.0 + table.kernel_l1);
  const double m = static_cast<double>(table.m_t);
  std::vector<double> penalty(n);
  for (std::size_t i = 0; i < n; ++i)
    penalty[i] = chi * table.kernel_l2 / std::sqrt(m * table.bandwidths[i]);

  GlChoice choice;
  choice.diagnostics.resize(n);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    double a = 0.0;
    for (std::size_t j = 0; j < n; ++j) a = std::max(a, table.dist[i][j] - penalty[j]);
    const double objective = a + penalty[i];
    choice.diagnostics[i] = {table.bandwidths[i], a, penalty[i], objective};
    if (objective < best) {
      best = objective;
      choice.index = i;
    }
  }
  choice.bandwidth = table.bandwidths[choice.index];
  return choice;
}

DensityEstimate gl_select(const Sample& sample, const KernelSpec& kernel, const BandwidthGrid& H,
                          double epsilon, const EvaluationGrid& grid) {
  require(std::isfinite(epsilon) && 1.0 + epsilon > 0.0, "GL requires 1 + epsilon > 0");
  const GlTable table = build_gl_table(sample, kernel, H, grid);
  GlChoice choice = gl_choose(table, epsilon);
  auto est = kde(sample, kernel, choice.bandwidth, grid);
  est.method = Method::GL;
  est.epsilon = epsilon;
  est.delta = H.delta;
  est.selector_mode = "goldenshluger-lepski";
  est.diagnostics = std::move(choice.diagnostics);
  return est;
}

double loo_pair_sum_direct(const Sample& sample, const KernelSpec& kernel, double bandwidth) {
  const auto v = sample.values();
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j) sum += kernel.scaled(v[j] - v[i], bandwidth);
  return 2.0 * sum;
}

DensityEstimate cv_select(const Sample& sample, const KernelSpec& kernel, const BandwidthGrid& H,
                          const EvaluationGrid& grid) {
  require(H.size() > 0, "bandwidth grid is empty");
  KernelSmoother smoother(sample, kernel, grid, H.smallest(), H.largest());
  return cv_select(smoother, H);
}

DensityEstimate cv_select(KernelSmoother& smoother, const BandwidthGrid& H) {
  require(smoother.m_t() >= 2, "cross-validation needs at least two observations");
  require(H.size() > 0, "bandwidth grid is empty");
  const EvaluationGrid& grid = smoother.grid();
  const double n = static_cast<double>(smoother.m_t());
  std::vector<DiagnosticRow> rows;
  std::size_t best_index = 0;
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_values;
  for (std::size_t i = 0; i < H.size(); ++i) {
    const double l = H.values[i];
    auto values = smoother.evaluate(l);
    const double integral_sq = squared_norm(values, grid.spacing());
    const double loo_mean = smoother.pair_sum(l) / (n - 1.0);
    const double objective = integral_sq - 2.0 / n * loo_mean;
    rows.push_back({l, kNaN, kNaN, objective});
    if (objective < best) {
      best = objective;
      best_index = i;
      best_values = std::move(values);
    }
  }
  auto est = make_estimate(grid, std::move(best_values), H.values[best_index], Method::CV,
                           smoother.m_t());
  est.delta = H.delta;
  est.selector_mode = "least-squares-cv";
  est.diagnostics = std::move(rows);
  return est;
}

double rot_bandwidth(const Sample& sample) {
  const auto v = sample.values();
  require(v.size() >= 2, "rule of thumb needs at least two observations");
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  require(sd > 0.0, "rule of thumb undefined for a zero-variance sample");
  return 1.06 * sd * std::pow(n, -0.2);
}

DensityEstimate rot_select(const Sample& sample, const KernelSpec& kernel, const EvaluationGrid& grid) {
  auto est = kde(sample, kernel, rot_bandwidth(sample), grid);
  est.method = Method::RoT;
  est.selector_mode = "rule-of-thumb";
  return est;
}

DensityEstimate oracle_select(const Sample& sample, const KernelSpec& kernel,
                              const BandwidthGrid& H, const EvaluationGrid& grid,
                              const GridFunction& truth) {
  require(H.size() > 0, "bandwidth grid is empty");
  KernelSmoother smoother(sample, kernel, grid, H.smallest(), H.largest());
  return oracle_select(smoother, H, truth);
}

DensityEstimate oracle_select(KernelSmoother& smoother, const BandwidthGrid& H,
                              const GridFunction& truth) {
  const EvaluationGrid& grid = smoother.grid();
  require_same_grid(grid, truth.grid);
  require(H.size() > 0, "bandwidth grid is empty");
  std::vector<DiagnosticRow> rows;
  std::size_t best_index = 0;
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_values;
  for (std::size_t i = 0; i < H.size(); ++i) {
    auto values = smoother.evaluate(H.values[i]);
    const double ise = squared_distance(values, truth.values, grid.spacing());
    rows.push_back({H.values[i], kNaN, kNaN, ise});
    if (ise < best) {
      best = ise;
      best_index = i;
      best_values = std::move(values);
    }
  }
  auto est = make_estimate(grid, std::move(best_values), H.values[best_index], Method::Oracle,
                           smoother.m_t());
  est.delta = H.delta;
  est.selector_mode = "per-sample";
  est.diagnostics = std::move(rows);
  return est;
}

std::size_t mc_oracle_index(std::span<const std::vector<double>> ise) {
  require(!ise.empty(), "Monte Carlo oracle needs at least one replicate");
  const std::size_t n = ise.front().size();
  require(n > 0, "Monte Carlo oracle needs candidates");
  std::vector<double> mean(n, 0.0);
  for (const auto& row : ise) {
    require(row.size() == n, "Monte Carlo oracle rows differ in length");
    for (std::size_t i = 0; i < n; ++i) mean[i] += row[i];
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (mean[i] < mean[best]) best = i;
  return best;
}

DensityEstimate symmetrize(const DensityEstimate& est) {
  require(est.grid.is_symmetric(), "symmetrize needs a grid symmetric about 1/2");
  DensityEstimate out = est;
  const std::size_t n = est.values.size();
  for (std::size_t i = 0; i < n; ++i) out.values[i] = 0.5 * (est.values[i] + est.values[n - 1 - i]);
  out.symmetrized = true;
  return out;
}

namespace {
double log_fraction_sum(std::span<const double> gammas) {
  double s = 0.0;
  for (double g : gammas) s += std::log(g) + std::log1p(-g);
  return s;
}
}  // namespace

double beta_score(std::span<const double> gammas, double a) {
  const double n = static_cast<double>(gammas.size());
  return log_fraction_sum(gammas) - 2.0 * n * (digamma(a) - digamma(2.0 * a));
}

double beta_log_likelihood(std::span<const double> gammas, double a) {
  const double n = static_cast<double>(gammas.size());
  const double log_beta = 2.0 * std::lgamma(a) - std::lgamma(2.0 * a);
  return (a - 1.0) * log_fraction_sum(gammas) - n * log_beta;
}

BetaFit beta_mle(const Sample& sample) {
  const auto g = sample.values();
  require(g.size() >= 2, "beta_mle needs at least two observations");
  const double n = static_cast<double>(g.size());
  const double s = log_fraction_sum(g);
  auto score = [&](double a) { return s - 2.0 * n * (digamma(a) - digamma(2.0 * a)); };
  auto slope = [&](double a) { return -2.0 * n * (trigamma(a) - 2.0 * trigamma(2.0 * a)); };

  double lo = 1e-3, hi = 1e3;
  if (score(lo) <= 0.0 || score(hi) >= 0.0)
    throw ConvergenceError("beta_mle: maximizer lies outside [1e-3, 1e3]");

  // method-of-moments start around 1/2: var = 1 / (4 (2a + 1))
  double ss = 0.0;
  for (double x : g) ss += (x - 0.5) * (x - 0.5);
  const double var = ss / n;
  double a = std::clamp((1.0 / (4.0 * var) - 1.0) / 2.0, 2.0 * lo, 0.5 * hi);

  BetaFit fit;
  for (int it = 1; it <= 200; ++it) {
    const double f = score(a);
    if (f > 0.0) lo = a; else hi = a;
    double next = a - f / slope(a);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - a);
    a = next;
    if (step <= 1e-14 * a || f == 0.0) {
      fit.a = a;
      fit.score = score(a);
      fit.iterations = it;
      return fit;
    }
  }
  throw ConvergenceError("beta_mle: no convergence after 200 iterations");
}

double integrated_squared_error(const GridFunction& est, const GridFunction& truth) {
  require_same_grid(est.grid, truth.grid);
  return squared_distance(est.values, truth.values, est.grid.spacing());
}

double relative_error(const GridFunction& est, const GridFunction& truth) {
  const double norm = l2_norm(truth);
  require(norm > 0.0, "relative_error: truth has zero norm");
  return l2_distance(est, truth) / norm;
}

}  // namespace divkernel::estimation
