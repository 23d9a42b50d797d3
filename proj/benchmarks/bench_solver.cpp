#include <thinfilm/cell_solver.hpp>
#include <thinfilm/geometry.hpp>

#include <benchmark/benchmark.h>

#include <cmath>

using namespace thinfilm;

namespace {

EnergyDensity golden_laminate(Family family) {
  Vec n(2);
  n << 1.0, -(1.0 + std::sqrt(5.0)) / 2.0;
  const Coefficient a = Coefficient::trig(2.0, {TrigMode{{1.0, 0.0}, 1.0, 0.0}});
  const auto base = family == Family::p_power ? EnergyDensity::p_power(1, 1, a, 3.0)
                                              : EnergyDensity::iso_quadratic(1, 1, a);
  return pull_back_density(base, build_frame(n));
}

// Cell problem at length T = range(0): conjugate gradients for the quadratic density.
void BM_CellCG(benchmark::State& state) {
  const auto f = golden_laminate(Family::iso_quadratic);
  const Mat A = Mat::Constant(1, 1, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(minimize_cell(A, static_cast<double>(state.range(0)), f).value);
  }
}
BENCHMARK(BM_CellCG)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

// Same cell with p = 3: L-BFGS.
void BM_CellLBFGS(benchmark::State& state) {
  const auto f = golden_laminate(Family::p_power);
  const Mat A = Mat::Constant(1, 1, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(minimize_cell(A, static_cast<double>(state.range(0)), f).value);
  }
}
BENCHMARK(BM_CellLBFGS)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace
