#include <benchmark/benchmark.h>

#include <map>

#include "ec/defect.hpp"
#include "ec/generator.hpp"
#include "ec/weakform.hpp"

namespace {

ec::SolverConfig bump(int n, int nt) {
  ec::SolverConfig cfg;
  cfg.grid = ec::Grid(1.0, n, n, nt, 0.1, 0.25);
  cfg.eps = cfg.kappa = 0.02;
  cfg.initial.kind = ec::InitialKind::smooth_bump;
  cfg.initial.radius = 0.5;
  return cfg;
}

const ec::GridField& solved(int n) {
  static std::map<int, ec::GridField> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, ec::nsf_solve(bump(n, 5)).field).first;
  return it->second;
}

void BM_NsfSolve(benchmark::State& state) {
  const auto cfg = bump(static_cast<int>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(ec::nsf_solve(cfg));
  state.SetLabel(std::to_string(state.range(0)) + "^2");
}
BENCHMARK(BM_NsfSolve)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_EvaluateResiduals(benchmark::State& state) {
  const auto& f = solved(static_cast<int>(state.range(0)));
  const auto tests = ec::make_lattice(f.grid());
  for (auto _ : state) benchmark::DoNotOptimize(ec::evaluate_residuals(f, tests));
  state.counters["tests"] = static_cast<double>(tests.size());
}
BENCHMARK(BM_EvaluateResiduals)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_DefectReport(benchmark::State& state) {
  const auto& f = solved(128);
  const ec::MacroPartition part;
  const std::vector<double> ladder{0.5, 1.0, 2.0, 4.0, 8.0};
  for (auto _ : state) {
    const auto ym = ec::empirical_ym(f, part);
    benchmark::DoNotOptimize(
        ec::DefectReport(ym, ec::registered_functionals(f.far(), f.params()), ladder));
  }
}
BENCHMARK(BM_DefectReport)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
