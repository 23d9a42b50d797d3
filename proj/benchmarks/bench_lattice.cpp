#include <thinfilm/lattice.hpp>

#include <benchmark/benchmark.h>

#include <cmath>

using namespace thinfilm;

namespace {

void BM_AlmostPeriods1D(benchmark::State& state) {
  Vec n(2);
  n << 1.0, -(1.0 + std::sqrt(5.0)) / 2.0;
  const auto frame = build_frame(n);
  const double radius = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(almost_periods(frame, 0.03, radius).size());
}
BENCHMARK(BM_AlmostPeriods1D)->Arg(100)->Arg(1000)->Unit(benchmark::kMicrosecond);

void BM_AlmostPeriods2D(benchmark::State& state) {
  Vec n(3);
  n << 1.0, std::sqrt(2.0), M_PI;
  const auto frame = build_frame(n);
  const double radius = static_cast<double>(state.range(0));
  for (auto _ : state) {
    const auto set = almost_periods(frame, 0.1, radius);
    benchmark::DoNotOptimize(inclusion_length(set, cube(2, -radius / 2, radius / 2), 128).L_eta);
  }
}
BENCHMARK(BM_AlmostPeriods2D)->Arg(10)->Arg(30)->Unit(benchmark::kMillisecond);

}  // namespace
