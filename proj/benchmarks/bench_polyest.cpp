#include <benchmark/benchmark.h>

#include <polyest/harness.hpp>
#include <polyest/problems.hpp>
#include <polyest/recover.hpp>
#include <polyest/subsolve.hpp>

using namespace polyest;

namespace {

ExperimentConfig config(Index n) {
  return make_config({{"n", std::to_string(n)}, {"K", std::to_string(n / 8)}, {"seed", "1"}});
}

Vector interior_point(const Polytope& x, Rng& rng) {
  Vector e(x.dim());
  for (Index i = 0; i < x.dim(); ++i) e(i) = rng.uniform();
  return x.lower + 0.5 * (x.radius - x.lower.sum()) * e / e.sum();
}

}  // namespace

static void BM_Eig(benchmark::State& state) {
  Rng rng(1);
  const Matrix g = rng.normal_matrix(state.range(0), state.range(0));
  const SymMatrix m = SymMatrix::symmetrize(g + g.transpose());
  for (auto _ : state) benchmark::DoNotOptimize(eig(m));
}
BENCHMARK(BM_Eig)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_ReducedOracle(benchmark::State& state) {
  const Instance inst = gen_instance(config(state.range(0)));
  const ReducedProblem rp = make_reduced_problem(inst.spec, 10);
  Rng rng(2);
  const Vector y = interior_point(rp.problem.domain, rng);
  for (auto _ : state) benchmark::DoNotOptimize(rp.problem.oracle(y));
}
BENCHMARK(BM_ReducedOracle)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_LevelLp(benchmark::State& state) {
  const Instance inst = gen_instance(config(64));
  const ReducedProblem rp = make_reduced_problem(inst.spec, 10);
  Rng rng(3);
  Bundle bundle;
  for (int i = 0; i < state.range(0); ++i) bundle.push_back(rp.problem.oracle(interior_point(rp.problem.domain, rng)).piece);
  for (auto _ : state) benchmark::DoNotOptimize(solve_level_lp(bundle, rp.problem.psi, rp.problem.domain));
}
BENCHMARK(BM_LevelLp)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

static void BM_Design64(benchmark::State& state) {
  const ExperimentConfig cfg = config(64);
  const Instance inst = gen_instance(cfg);
  for (auto _ : state) benchmark::DoNotOptimize(run_design(inst.spec, cfg));
}
BENCHMARK(BM_Design64)->Unit(benchmark::kMillisecond);

static void BM_PolyhedralApply(benchmark::State& state) {
  const ExperimentConfig cfg = config(state.range(0));
  const Instance inst = gen_instance(cfg);
  const DesignResult d = run_design(inst.spec, cfg);
  const PolyhedralEstimator est(d.h, inst.spec);
  Rng rng(4);
  const Vector x = sample_boundary(inst.spec.signal_set(), rng);
  const Vector omega = inst.spec.a() * x + inst.spec.sigma() * rng.normal_vector(inst.spec.m());
  for (auto _ : state) benchmark::DoNotOptimize(est.apply(omega));
}
BENCHMARK(BM_PolyhedralApply)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
