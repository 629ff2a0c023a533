#include <benchmark/benchmark.h>

#include "divkernel/estimation.hpp"
#include "divkernel/rng.hpp"
#include "divkernel/simulation.hpp"
#include "divkernel/spectral_kde.hpp"

using namespace divkernel;

namespace {

std::vector<double> beta_sample(std::size_t n) {
  Pcg32 rng(17);
  std::vector<double> x(n);
  for (auto& v : x) v = rng.beta(2.0, 2.0);
  return x;
}

void BM_Simulate(benchmark::State& state) {
  sim::SimConfig cfg;
  cfg.horizon = static_cast<double>(state.range(0));
  std::uint64_t seed = 0;
  std::uint64_t events = 0;
  for (auto _ : state) {
    cfg.seed = seed++;
    const auto traj = sim::simulate(cfg);
    events += traj.m_t();
    benchmark::DoNotOptimize(traj.records.data());
  }
  state.counters["events"] = benchmark::Counter(static_cast<double>(events), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Simulate)->Arg(13)->Arg(17)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_DirectKde(benchmark::State& state) {
  const estimation::Sample s(beta_sample(static_cast<std::size_t>(state.range(0))));
  const auto k = gaussian_kernel();
  for (auto _ : state) benchmark::DoNotOptimize(estimation::kde(s, k, 0.05, EvaluationGrid{}).values.data());
}
BENCHMARK(BM_DirectKde)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_SpectralKde(benchmark::State& state) {
  const auto x = beta_sample(static_cast<std::size_t>(state.range(0)));
  SpectralKde sk(x, gaussian_kernel(), EvaluationGrid{}, 1.0 / 128, 1.5);
  for (auto _ : state) benchmark::DoNotOptimize(sk.evaluate(0.05).data());
}
BENCHMARK(BM_SpectralKde)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);

void BM_SpectralSetup(benchmark::State& state) {
  const auto x = beta_sample(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    SpectralKde sk(x, gaussian_kernel(), EvaluationGrid{}, 1.0 / 128, 1.5);
    benchmark::DoNotOptimize(sk.fft_size());
  }
}
BENCHMARK(BM_SpectralSetup)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_GlSelect(benchmark::State& state) {
  const estimation::Sample s(beta_sample(static_cast<std::size_t>(state.range(0))));
  const auto H = BandwidthGrid::for_sample(s.m_t(), 0.05, 128);
  const auto k = gaussian_kernel();
  for (auto _ : state) benchmark::DoNotOptimize(estimation::gl_select(s, k, H, -0.68, EvaluationGrid{}).bandwidth);
}
BENCHMARK(BM_GlSelect)->Arg(665)->Arg(4915)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
