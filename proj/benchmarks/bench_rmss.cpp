#include <benchmark/benchmark.h>

#include <cstdint>
#include <numeric>
#include <vector>

#include "rmss/psbgd.hpp"
#include "rmss/robust.hpp"
#include "rmss/selection.hpp"
#include "rmss/simlab.hpp"
#include "rmss/simrng.hpp"
#include "rmss/stepwise.hpp"

using namespace rmss;

namespace {

Dataset make_problem(std::uint64_t seed, int n, int p, double alpha) {
  SimConfig cfg;
  cfg.n = n;
  cfg.p = p;
  cfg.zeta = std::min(1.0, 10.0 / p);
  cfg.block_size = 5;
  cfg.alpha = alpha;
  cfg.seed = seed;
  SimData sd = contaminate(simulate_clean(cfg), cfg);
  Dataset d;
  d.X = sd.X;
  d.y = sd.y;
  return d;
}

void bm_tau_scale(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  SimRng rng(1);
  Vector r(n);
  for (int i = 0; i < n; ++i) r[i] = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(tau_scale(r));
  state.SetItemsProcessed(state.iterations() * n);
}

void bm_robust_correlations(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  Dataset d = make_problem(2, 200, p, 0.0);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        robust_correlations(d, CorrelationEstimator::PairwiseGK));
}

void bm_stepwise(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  Dataset d = make_problem(3, 100, p, 0.0);
  auto std_d = robust_standardize(d);
  for (auto _ : state)
    benchmark::DoNotOptimize(multi_model_stepwise(
        std_d.first, CorrelationEstimator::PairwiseGK, 5, 1.0));
}

void bm_psbgd_single(benchmark::State& state) {
  const int n = 50, p = static_cast<int>(state.range(0));
  Dataset d = make_problem(4, n, p, 0.1);
  auto std_d = robust_standardize(d).first;
  std::vector<int> allowed(p);
  std::iota(allowed.begin(), allowed.end(), 0);
  ModelState init;
  init.beta = Vector::Zero(p);
  init.eta = Vector::Zero(n);
  PsbgdOptions opt;
  opt.l_beta = lipschitz_beta(std_d.X, allowed);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        psbgd_single(std_d, init, allowed, 10, 40, opt));
}

void bm_grid_fit(benchmark::State& state) {
  const int n = 50, p = 60;
  Dataset d = make_problem(5, n, p, 0.1);
  auto std_d = robust_standardize(d).first;
  auto supports =
      multi_model_stepwise(std_d, CorrelationEstimator::PairwiseGK, 3, 1.0);
  TuningGrid grid;
  grid.T = {5, 10};
  grid.H = {40, 45, 50};
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(
        grid_fit(std_d, supports, grid, 3, 1e-8 * std_d.y.squaredNorm(),
                 threads));
}

void bm_full_fit(benchmark::State& state) {
  Dataset d = make_problem(6, 50, static_cast<int>(state.range(0)), 0.2);
  FitOptions opt;
  opt.n_models = 3;
  opt.k_folds = 3;
  opt.t_grid = {5, 10};
  opt.h_grid = {40, 50};
  for (auto _ : state) benchmark::DoNotOptimize(fit(d, opt));
}

}  // namespace

BENCHMARK(bm_tau_scale)->Arg(100)->Arg(1000)->Arg(10000);
BENCHMARK(bm_robust_correlations)->Arg(50)->Arg(100)->Arg(200);
BENCHMARK(bm_stepwise)->Arg(50)->Arg(100)->Arg(200);
BENCHMARK(bm_psbgd_single)->Arg(50)->Arg(100)->Arg(200);
BENCHMARK(bm_grid_fit)->Arg(1)->Arg(2)->Arg(4);
BENCHMARK(bm_full_fit)->Arg(60)->Arg(100);

BENCHMARK_MAIN();
