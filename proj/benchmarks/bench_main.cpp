#include <benchmark/benchmark.h>

#include "fdrscca/fdrscca.hpp"

using namespace fdrscca;

namespace {

CovarianceModel model(Index p, Index s) {
  BlockModelSpec spec;
  spec.px = spec.py = p;
  spec.sx = spec.sy = s;
  return build_block_model(spec);
}

DataMatrixPair data(Index n, Index p, Index s) {
  return standardize(sample_joint_gaussian(model(p, s), n, 1));
}

void BM_Solve(benchmark::State& state) {
  const Index p = state.range(0);
  const DataMatrixPair d = data(200, p, 20);
  const SparseCcaSolver solver(d, SolverConfig{});
  const PenaltyParams pen(0.3, 0.3, p, p);
  for (auto _ : state) benchmark::DoNotOptimize(solver.solve(pen));
}
BENCHMARK(BM_Solve)->Arg(100)->Arg(300)->Arg(1500)->Unit(benchmark::kMillisecond);

void BM_TuneToTarget(benchmark::State& state) {
  const DataMatrixPair d = data(200, state.range(0), 20);
  for (auto _ : state) {
    benchmark::DoNotOptimize(tune_to_target_support(d, 100, 100, SolverConfig{}, 200));
  }
}
BENCHMARK(BM_TuneToTarget)->Arg(300)->Arg(1500)->Unit(benchmark::kMillisecond);

void BM_RunProcedure(benchmark::State& state) {
  const DataMatrixPair d = data(600, state.range(0), 20);
  PipelineConfig cfg;
  cfg.target_nnz = 100;
  for (auto _ : state) benchmark::DoNotOptimize(run_procedure(d, cfg));
}
BENCHMARK(BM_RunProcedure)->Arg(300)->Arg(1500)->Unit(benchmark::kMillisecond);

void BM_Sample(benchmark::State& state) {
  const GaussianSampler sampler(model(state.range(0), 20));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sampler.sample(600, ++seed));
}
BENCHMARK(BM_Sample)->Arg(300)->Arg(1500)->Unit(benchmark::kMillisecond);

void BM_BenjaminiHochberg(benchmark::State& state) {
  Rng rng(3);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector p(state.range(0));
  for (Index i = 0; i < p.size(); ++i) p[i] = unif(rng) * unif(rng);
  for (auto _ : state) benchmark::DoNotOptimize(benjamini_hochberg(p, 0.1));
}
BENCHMARK(BM_BenjaminiHochberg)->Arg(100)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
