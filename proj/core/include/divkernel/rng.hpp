#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace divkernel {

/// SplitMix64 finalizer; used to turn structured seeds into well-mixed words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Folds a list of words into one seed. Order matters.
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = mix64(master);
  for (std::uint64_t word : path) h = mix64(h ^ mix64(word + 0x632be59bd9b4e019ULL));
  return h;
}

/// PCG32 (XSH-RR 64/32). Each (seed, stream) pair is an independent sequence,
/// which is how replicates get disjoint streams from one master seed.
///
/// Satisfies std::uniform_random_bit_generator, but the samplers in this
/// library use the helpers below so results do not depend on the standard
/// library's distribution implementations.
class Pcg32 {
 public:
  using result_type = std::uint32_t;

  explicit Pcg32(std::uint64_t seed = 0x853c49e6748fea9bULL,
                 std::uint64_t stream = 0xda3e39cb94b95bdbULL) noexcept {
    inc_ = (stream << 1u) | 1u;
    state_ = 0;
    (*this)();
    state_ += seed;
    (*this)();
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    const std::uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    const auto xorshifted = static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
    const auto rot = static_cast<std::uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
  }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t hi = (*this)();
    return (hi << 32u) | (*this)();
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11u) * 0x1.0p-53; }

  /// Uniform on (0, 1).
  double uniform_open() noexcept {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }

  /// Unbiased integer in [0, bound) (Lemire's multiply-shift with rejection).
  std::uint64_t below(std::uint64_t bound) noexcept {
    if (bound <= 1) return 0;
    if (bound <= 0xffffffffULL) {
      const auto b = static_cast<std::uint32_t>(bound);
      std::uint64_t m = static_cast<std::uint64_t>((*this)()) * b;
      auto low = static_cast<std::uint32_t>(m);
      if (low < b) {
        const std::uint32_t threshold = static_cast<std::uint32_t>(-b) % b;
        while (low < threshold) {
          m = static_cast<std::uint64_t>((*this)()) * b;
          low = static_cast<std::uint32_t>(m);
        }
      }
      return m >> 32u;
    }
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r;
    do {
      r = next_u64();
    } while (r >= limit);
    return r % bound;
  }

  /// Exp(rate) variate by inversion.
  double exponential(double rate) noexcept { return -std::log1p(-uniform()) / rate; }

  /// Standard normal (Marsaglia polar method, no caching).
  double normal() noexcept {
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    return u * std::sqrt(-2.0 * std::log(s) / s);
  }

  /// Gamma(shape, 1) variate. Marsaglia-Tsang squeeze; shapes below one use
  /// the boost G(a) = G(a + 1) * U^(1/a).
  double gamma(double shape) noexcept {
    if (shape < 1.0) {
      const double g = gamma(shape + 1.0);
      return g * std::pow(uniform_open(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_open();
      const double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  /// Beta(a, b) via the gamma ratio X / (X + Y).
  double beta(double a, double b) noexcept {
    const double x = gamma(a);
    const double y = gamma(b);
    return x / (x + y);
  }

  friend bool operator==(const Pcg32&, const Pcg32&) = default;

 private:
  std::uint64_t state_;
  std::uint64_t inc_;
};

/// Generator for replicate `index` of an experiment seeded with `master`.
inline Pcg32 replicate_stream(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  const std::uint64_t s = derive_seed(master, path);
  return Pcg32(s, mix64(s ^ 0x5851f42d4c957f2dULL));
}

}  // namespace divkernel
