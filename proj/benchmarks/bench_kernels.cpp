#include <benchmark/benchmark.h>

#include "imcgae/graph.hpp"
#include "imcgae/model.hpp"
#include "imcgae/rng.hpp"
#include "imcgae/synth.hpp"
#include "imcgae/tape.hpp"

using namespace imcgae;

namespace {

RatingDataset bench_dataset(std::int32_t users, std::int32_t items, double density) {
  SynthConfig cfg;
  cfg.n_users = users;
  cfg.n_items = items;
  cfg.density = density;
  cfg.seed = 7;
  return build_dataset(synth_ratings(cfg));
}

NumArray random_features(int rows, int cols, std::uint64_t seed) {
  rng::Engine g(seed);
  NumArray x(rows, cols);
  for (auto& v : x.data) v = rng::uniform(g, -1, 1);
  return x;
}

}  // namespace

static void BM_Propagate(benchmark::State& state) {
  const auto ds = bench_dataset(600, 800, 0.04);
  const auto graph = build_graph(ds);
  const NumArray x = random_features(graph.node_count(), static_cast<int>(state.range(0)), 1);
  for (auto _ : state) {
    for (int level = 0; level < static_cast<int>(graph.level_count()); ++level)
      benchmark::DoNotOptimize(propagate(x, graph, level));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(graph.edge_count()));
}
BENCHMARK(BM_Propagate)->Arg(32)->Arg(96)->Arg(180);

static void BM_MatmulNT(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Tape tape;
  const ValueId a = tape.leaf(random_features(n, 180, 2));
  const ValueId b = tape.leaf(random_features(40, 180, 3));
  for (auto _ : state) {
    Tape t;
    const ValueId x = t.leaf(tape.value(a));
    const ValueId w = t.leaf(tape.value(b));
    benchmark::DoNotOptimize(t.value(t.matmul_nt(x, w)));
  }
}
BENCHMARK(BM_MatmulNT)->Arg(512)->Arg(2048);

static void BM_DecodePairs(benchmark::State& state) {
  const auto ds = bench_dataset(400, 500, 0.05);
  HyperParams hp;
  hp.dim_identical = 16;
  hp.dim_role = 16;
  hp.dim_latent = 16;
  hp.dim_decode = 24;
  const auto params = init_params(hp, ds.n_users, ds.n_items, ds.levels, 5);
  const auto graph = build_graph(ds);
  const auto enc = encode(graph, params, hp);
  std::vector<std::pair<std::int32_t, std::int32_t>> pairs;
  for (const auto& t : ds.triples) pairs.emplace_back(t.user, ds.n_users + t.item);
  for (auto _ : state) benchmark::DoNotOptimize(decode(enc.node_repr, pairs, params));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pairs.size()));
}
BENCHMARK(BM_DecodePairs);

static void BM_TrainEpoch(benchmark::State& state) {
  const auto ds = bench_dataset(300, 400, 0.05);
  HyperParams hp;
  hp.dim_identical = 16;
  hp.dim_role = 16;
  hp.dim_latent = 16;
  hp.dim_decode = 24;
  hp.lr = 0.01;
  for (auto _ : state) {
    HyperParams one = hp;
    one.epochs = 1;
    benchmark::DoNotOptimize(fit(ds, one));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ds.triples.size()));
}
BENCHMARK(BM_TrainEpoch);

BENCHMARK_MAIN();
