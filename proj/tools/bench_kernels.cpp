#include <benchmark/benchmark.h>

#include <random>

#include "cflow/constraint.hpp"
#include "cflow/fem.hpp"
#include "cflow/kernels.hpp"

namespace {

using namespace cflow;

std::vector<double> random_vector(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

// mesh sizes: n = 64 is the production benchmark, n = 512 exercises the
// parallel path above the grain threshold
FeSpace space_for(int n) { return make_space(build_uniform_mesh(n), 3); }

void bm_dot_serial(benchmark::State& state) {
  const auto x = random_vector(state.range(0), 1);
  const auto y = random_vector(state.range(0), 2);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::dot_serial(x, y));
}

void bm_dot_parallel(benchmark::State& state) {
  const auto x = random_vector(state.range(0), 1);
  const auto y = random_vector(state.range(0), 2);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::dot(x, y));
}

void bm_axpy_serial(benchmark::State& state) {
  const auto x = random_vector(state.range(0), 1);
  auto y = random_vector(state.range(0), 2);
  for (auto _ : state) {
    kernels::axpy_serial(0.5, x, y);
    benchmark::ClobberMemory();
  }
}

void bm_axpy_parallel(benchmark::State& state) {
  const auto x = random_vector(state.range(0), 1);
  auto y = random_vector(state.range(0), 2);
  for (auto _ : state) {
    kernels::axpy(0.5, x, y);
    benchmark::ClobberMemory();
  }
}

void bm_stiffness_matvec_serial(benchmark::State& state) {
  const FeSpace space = space_for(static_cast<int>(state.range(0)));
  const auto K = assemble_anisotropic_stiffness(space, {1.0, 10.0});
  const auto x = random_vector(space.dof_count(), 3);
  std::vector<double> y(x.size());
  for (auto _ : state) {
    kernels::csr_matvec_serial(K.csr, 3, x, y);
    benchmark::ClobberMemory();
  }
}

void bm_stiffness_matvec_parallel(benchmark::State& state) {
  const FeSpace space = space_for(static_cast<int>(state.range(0)));
  const auto K = assemble_anisotropic_stiffness(space, {1.0, 10.0});
  const auto x = random_vector(space.dof_count(), 3);
  std::vector<double> y(x.size());
  for (auto _ : state) {
    kernels::csr_matvec(K.csr, 3, x, y);
    benchmark::ClobberMemory();
  }
}

void bm_violation_field(benchmark::State& state) {
  const FeSpace space = space_for(static_cast<int>(state.range(0)));
  const auto u = random_vector(space.dof_count(), 4);
  for (auto _ : state) benchmark::DoNotOptimize(violation_field(space, u));
}

}  // namespace

BENCHMARK(bm_dot_serial)->Arg(12675)->Arg(1 << 20);
BENCHMARK(bm_dot_parallel)->Arg(12675)->Arg(1 << 20);
BENCHMARK(bm_axpy_serial)->Arg(12675)->Arg(1 << 20);
BENCHMARK(bm_axpy_parallel)->Arg(12675)->Arg(1 << 20);
BENCHMARK(bm_stiffness_matvec_serial)->Arg(64)->Arg(512);
BENCHMARK(bm_stiffness_matvec_parallel)->Arg(64)->Arg(512);
BENCHMARK(bm_violation_field)->Arg(64)->Arg(512);

BENCHMARK_MAIN();
