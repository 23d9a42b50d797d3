#include <thinfilm/cell_solver.hpp>

#include <benchmark/benchmark.h>

#include <random>

using namespace thinfilm;

namespace {

EnergyDensity trig_density(int d) {
  std::vector<double> k(static_cast<std::size_t>(d + 1), 1.0);
  return EnergyDensity::iso_quadratic(d, 1, Coefficient::trig(2.0, {TrigMode{k, 0.8, 0.0}}));
}

// Energy + gradient on a d = 2 slab; the argument is the number of workers.
void BM_EnergyGradient2D(benchmark::State& state) {
  const auto f = trig_density(2);
  const auto grid = build_grid(2, 8.0, 0.5, 8, 8);
  const CellAssembler asmb(grid, f, cell_scaling(grid), static_cast<int>(state.range(0)));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(-0.1, 0.1);
  Field u(static_cast<Eigen::Index>(grid.node_count()));
  for (auto& v : u) v = U(rng);
  apply_constraints(grid, u, 1);
  Mat A(1, 2);
  A << 1.0, 0.5;
  Field g;
  for (auto _ : state) benchmark::DoNotOptimize(asmb.energy_and_gradient(u, A, g));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(grid.element_count()));
}
BENCHMARK(BM_EnergyGradient2D)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_Assembler1D(benchmark::State& state) {
  const auto f = trig_density(1);
  for (auto _ : state) {
    const auto grid = build_grid(1, static_cast<double>(state.range(0)), 0.5, 16, 16);
    benchmark::DoNotOptimize(CellAssembler(grid, f, cell_scaling(grid)).free_size());
  }
}
BENCHMARK(BM_Assembler1D)->Arg(16)->Arg(64)->Unit(benchmark::kMicrosecond);

}  // namespace
