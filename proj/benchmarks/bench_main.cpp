#include <benchmark/benchmark.h>

#include <vector>

#include "wolffkit/kappa.hpp"
#include "wolffkit/measure.hpp"
#include "wolffkit/potentials.hpp"
#include "wolffkit/solver.hpp"

using namespace wolffkit;

namespace {

const Params kPrm{3, 1.0, 2.0, 0.5};

GridMeasure unit_ball(int cells, int subsample) {
  MeasureSpec s;
  s.kind = MeasureSpec::Kind::UniformBall;
  s.dim = 3;
  s.cells = cells;
  s.subsample = subsample;
  return build_grid_measure(s);
}

void BM_PlanBuild(benchmark::State& st) {
  GridMeasure m = unit_ball(static_cast<int>(st.range(0)), 2);
  for (auto _ : st) {
    WolffPlan plan(m, kPrm, m.cell_centers());
    benchmark::DoNotOptimize(plan.cached());
  }
  st.counters["cells"] = static_cast<double>(m.cell_count());
}
BENCHMARK(BM_PlanBuild)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_ApplyT(benchmark::State& st) {
  GridMeasure m = unit_ball(static_cast<int>(st.range(0)), 2);
  SublinearOperator op(m, kPrm);
  std::vector<double> u(m.cell_count(), 1.0);
  for (auto _ : st) benchmark::DoNotOptimize(op.apply(u));
  st.counters["cells"] = static_cast<double>(m.cell_count());
}
BENCHMARK(BM_ApplyT)->Arg(8)->Arg(12)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_Solve(benchmark::State& st) {
  GridMeasure m = unit_ball(static_cast<int>(st.range(0)), 2);
  for (auto _ : st) benchmark::DoNotOptimize(solve_minimal(m, kPrm).iterations);
}
BENCHMARK(BM_Solve)->Arg(8)->Arg(12)->Unit(benchmark::kMillisecond);

void BM_BallKappaTable(benchmark::State& st) {
  GridMeasure m = unit_ball(6, 1);
  std::vector<double> centers = {0.0, 0.0, 0.0};
  KappaOptions opt;
  opt.lower_bounds = false;
  for (auto _ : st) benchmark::DoNotOptimize(build_ball_kappa_table(m, kPrm, centers, opt).global_kappa);
}
BENCHMARK(BM_BallKappaTable)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
