#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "mfplan/densities.hpp"
#include "mfplan/metrics.hpp"
#include "mfplan/poisson.hpp"
#include "mfplan/primal.hpp"
#include "mfplan/prox.hpp"

using namespace mfplan;

static void BM_ProxAction(benchmark::State& state) {
  PointModel c;
  c.p = 2.5;
  c.a = 0.7;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<std::pair<double, Vec>> inputs(1024);
  for (auto& [m, w] : inputs) {
    m = u(rng);
    w = {u(rng), u(rng)};
  }
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& [m, w] = inputs[i++ & 1023];
    benchmark::DoNotOptimize(prox_action(c, m, w, 0.3));
  }
}
BENCHMARK(BM_ProxAction);

static void BM_NeumannPoisson(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const NeumannPoisson solver({n + 1, n, n}, {1.0 / n, 2.0 / n, 2.0 / n});
  std::vector<double> rhs(solver.size());
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  for (double& v : rhs) v = g(rng);
  std::vector<double> work(rhs.size());
  for (auto _ : state) {
    work = rhs;
    benchmark::DoNotOptimize(solver.solve(work));
  }
}
BENCHMARK(BM_NeumannPoisson)->Arg(16)->Arg(32)->Arg(64);

static void BM_SolverIterations(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const GridSpec g{1, n, n, 2.0};
  const Density a = gaussian_density(g, {-0.5, 0.0}, 0.25), b = gaussian_density(g, {0.5, 0.0}, 0.25);
  ModelSpec model;
  SolverConfig cfg;
  cfg.max_iters = 100;
  cfg.stop_gap = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_planning(model, g, a.values, b.values, cfg).iterations);
  }
  state.SetItemsProcessed(state.iterations() * cfg.max_iters);
}
BENCHMARK(BM_SolverIterations)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_HeatConnector(benchmark::State& state) {
  const GridSpec g{1, 4, static_cast<int>(state.range(0)), 2.0};
  const Density m = gaussian_density(g, {0.1, 0.0}, 0.2);
  for (auto _ : state) benchmark::DoNotOptimize(heat_connector(m, 0.01).values.data());
}
BENCHMARK(BM_HeatConnector)->Arg(256)->Arg(1024);

BENCHMARK_MAIN();
