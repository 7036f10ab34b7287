#include "gcsr/engine.hpp"
#include "gcsr/graph.hpp"
#include "gcsr/self_expressive.hpp"
#include "gcsr/synthetic.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace gcsr;

namespace {

Matrix uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  return Matrix::NullaryExpr(rows, cols, [&] { return u(rng); });
}

void BM_SolveZ(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 rng(1);
  SelfExpressiveProblem p;
  p.features = uniform(n, 256, rng);
  p.prior = uniform(n, n, rng, 0, 1);
  p.history = Matrix::Identity(n, n);
  for (auto _ : state) benchmark::DoNotOptimize(solve_z(p));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SolveZ)->RangeMultiplier(2)->Range(64, 1024)->Unit(benchmark::kMillisecond)->Complexity(benchmark::oNCubed);

void BM_Propagate(benchmark::State& state) {
  SbmSpec spec;
  const int block = static_cast<int>(state.range(0));
  spec.block_sizes = {block, block, block};
  spec.p_in = 10.0 / block;
  spec.p_out = 1.0 / block;
  spec.num_features = 128;
  const GraphDataset ds = make_sbm(spec);
  const NormalizedAdjacency norm = normalize_adjacency(ds.adjacency);
  const int k = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(propagate(norm, ds.features, k));
  state.SetItemsProcessed(state.iterations() * ds.adjacency.nonZeros() * k);
}
BENCHMARK(BM_Propagate)->ArgsProduct({{1000, 10000}, {1, 2, 4}})->Unit(benchmark::kMillisecond);

void BM_UnrollAndMetaGradient(benchmark::State& state) {
  const auto n_syn = static_cast<Eigen::Index>(state.range(0));
  const int steps = static_cast<int>(state.range(1));
  std::mt19937_64 rng(3);
  CondensedGraph g;
  g.features = uniform(n_syn, 128, rng);
  g.adjacency = symmetrize(uniform(n_syn, n_syn, rng));
  Labels y;
  std::vector<int> counts(4, 0);
  for (Eigen::Index i = 0; i < n_syn; ++i) {
    y.push_back(static_cast<int>(i % 4));
    ++counts[static_cast<std::size_t>(i % 4)];
  }
  g.labels = SyntheticLabels{y, counts};
  const ModelParams start = init_params(Arch::SGC, 128, kDefaultHidden, 4, 5);
  ModelParams end = start;
  for (auto& w : end.layers) w += uniform(w.rows(), w.cols(), rng, -0.01, 0.01);
  for (auto _ : state) {
    const auto [theta, tape] = inner_train_unrolled(start, g, 2, steps, 0.01);
    benchmark::DoNotOptimize(meta_gradient(tape, end, start));
  }
}
BENCHMARK(BM_UnrollAndMetaGradient)->ArgsProduct({{32, 128}, {5, 20}})->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
