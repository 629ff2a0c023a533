#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "divkernel/grid.hpp"
#include "divkernel/kernel.hpp"
#include "divkernel/kernel_model.hpp"

namespace divkernel {
class SpectralKde;
}

namespace divkernel::estimation {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

enum class Method { GL, Oracle, CV, RoT, ML, Fixed };

std::string_view to_string(Method m);
/// Case-insensitive; throws InvalidArgument for unknown names.
Method parse_method(std::string_view name);

/// Observed division fractions, each strictly inside (0, 1).
class Sample {
 public:
  explicit Sample(std::vector<double> gammas);
  std::span<const double> values() const { return gammas_; }
  std::size_t m_t() const { return gammas_.size(); }

 private:
  std::vector<double> gammas_;
};

/// One row of a selector's per-bandwidth table. Fields a selector does not
/// use are NaN.
struct DiagnosticRow {
  double ell = kNaN;
  double a_value = kNaN;
  double penalty = kNaN;
  double objective = kNaN;
};

struct DensityEstimate : GridFunction {
  double bandwidth = kNaN;
  Method method = Method::Fixed;
  std::uint64_t m_t = 0;
  double epsilon = kNaN;
  double delta = kNaN;
  std::string selector_mode;
  bool symmetrized = false;
  std::vector<DiagnosticRow> diagnostics;
};

/// h(x) of a division kernel model on `grid` (zero outside (0, 1)).
GridFunction tabulate(const DivisionKernelModel& model, const EvaluationGrid& grid);

/// Plain kernel estimator (1/M) sum K_l(x - gamma_i), evaluated directly.
DensityEstimate kde(const Sample& sample, const KernelSpec& kernel, double bandwidth,
                    const EvaluationGrid& grid);

/// (1/M) sum (K_l * K_l')(x - gamma_i). Uses the kernel's closed-form
/// self-convolution when present, otherwise a quadrature table of K_l * K_l'.
DensityEstimate double_kde(const Sample& sample, const KernelSpec& kernel, double bandwidth,
                           double inner_bandwidth, const EvaluationGrid& grid);

/// (K_l * K_l')(z) by adaptive Gauss-Kronrod quadrature.
double kernel_convolution_quadrature(const KernelSpec& kernel, double l1, double l2, double z);

/// Grid values of h_l (and of h_{l,l'}) for many bandwidths on one sample.
/// Uses SpectralKde when the kernel has a Fourier transform, so any bandwidth
/// in [min_bandwidth, max_bandwidth] costs one FFT; otherwise direct sums.
/// Not thread-safe per instance.
class KernelSmoother {
 public:
  KernelSmoother(const Sample& sample, const KernelSpec& kernel, const EvaluationGrid& grid,
                 double min_bandwidth, double max_bandwidth);
  ~KernelSmoother();
  KernelSmoother(const KernelSmoother&) = delete;
  KernelSmoother& operator=(const KernelSmoother&) = delete;

  std::vector<double> evaluate(double bandwidth);
  std::vector<double> evaluate_double(double bandwidth, double inner_bandwidth);
  /// sum_{i != j} K_l(gamma_j - gamma_i)
  double pair_sum(double bandwidth) const;

  const EvaluationGrid& grid() const { return grid_; }
  const KernelSpec& kernel() const { return kernel_; }
  std::uint64_t m_t() const { return sorted_.size(); }
  bool is_spectral() const { return spectral_ != nullptr; }

  /// Widest effective bandwidth of h_{l,l} (upper end of the range GL needs).
  static double widest_double(const KernelSpec& kernel, double bandwidth);

 private:
  KernelSpec kernel_;
  EvaluationGrid grid_;
  std::vector<double> sorted_;
  std::unique_ptr<SpectralKde> spectral_;
};

/// Trapezoid L2 distance; grids must match.
double l2_distance(const GridFunction& a, const GridFunction& b);
double l2_norm(const GridFunction& f);

/// Distances ||h_{l,l'} - h_l'|| for every pair of candidates: the part of the
/// Goldenshluger-Lepski criterion that does not depend on epsilon.
struct GlTable {
  std::vector<double> bandwidths;          // decreasing
  std::vector<std::vector<double>> dist;   // dist[i][j] = ||h_{l_i,l_j} - h_{l_j}||
  std::uint64_t m_t = 0;
  double kernel_l1 = 1.0;
  double kernel_l2 = 1.0;
};

struct GlChoice {
  std::size_t index = 0;
  double bandwidth = kNaN;
  std::vector<DiagnosticRow> diagnostics;
};

GlTable build_gl_table(const Sample& sample, const KernelSpec& kernel, const BandwidthGrid& H,
                       const EvaluationGrid& grid);
GlTable build_gl_table(KernelSmoother& smoother, const BandwidthGrid& H);

/// argmin_l { A(l) + chi ||K||_2 / sqrt(M l) }, chi = (1 + eps)(1 + ||K||_1),
/// A(l) = max_l' ( dist(l, l') - chi ||K||_2 / sqrt(M l') )_+ .
/// Ties go to the largest bandwidth.
GlChoice gl_choose(const GlTable& table, double epsilon);

DensityEstimate gl_select(const Sample& sample, const KernelSpec& kernel, const BandwidthGrid& H,
                          double epsilon, const EvaluationGrid& grid);

/// Least-squares cross-validation over H:
/// int h_l^2 - (2/n) sum_i h_{l,-i}(gamma_i).
DensityEstimate cv_select(const Sample& sample, const KernelSpec& kernel, const BandwidthGrid& H,
                          const EvaluationGrid& grid);
DensityEstimate cv_select(KernelSmoother& smoother, const BandwidthGrid& H);

/// Sum over ordered pairs i != j of K_l(gamma_j - gamma_i), evaluated directly.
double loo_pair_sum_direct(const Sample& sample, const KernelSpec& kernel, double bandwidth);

/// 1.06 * sd * n^{-1/5}, sd with the n - 1 denominator.
double rot_bandwidth(const Sample& sample);
DensityEstimate rot_select(const Sample& sample, const KernelSpec& kernel, const EvaluationGrid& grid);

/// Per-sample oracle: the candidate with the smallest ||h_l - truth||^2.
DensityEstimate oracle_select(const Sample& sample, const KernelSpec& kernel,
                              const BandwidthGrid& H, const EvaluationGrid& grid,
                              const GridFunction& truth);
DensityEstimate oracle_select(KernelSmoother& smoother, const BandwidthGrid& H,
                              const GridFunction& truth);

/// Monte Carlo oracle: index of the candidate minimizing the average of
/// ise[r][i] over replicates r. Ties go to the smallest index (largest bandwidth).
std::size_t mc_oracle_index(std::span<const std::vector<double>> ise);

/// (h(x) + h(1 - x)) / 2 on a grid symmetric about 1/2.
DensityEstimate symmetrize(const DensityEstimate& est);

struct BetaFit {
  double a = kNaN;
  double score = kNaN;
  int iterations = 0;
};

/// d/da of the Beta(a, a) log-likelihood.
double beta_score(std::span<const double> gammas, double a);
double beta_log_likelihood(std::span<const double> gammas, double a);

/// ML estimate of a in Beta(a, a): safeguarded Newton on the score, bracket [1e-3, 1e3].
BetaFit beta_mle(const Sample& sample);

/// ||est - truth||_2 / ||truth||_2 on their shared grid.
double relative_error(const GridFunction& est, const GridFunction& truth);

/// Integrated squared error ||est - truth||_2^2.
double integrated_squared_error(const GridFunction& est, const GridFunction& truth);

}  // namespace divkernel::estimation
