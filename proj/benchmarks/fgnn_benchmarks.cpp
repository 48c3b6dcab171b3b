#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "fgnn/model.hpp"
#include "fgnn/train.hpp"

namespace {

using namespace fgnn;

std::vector<std::size_t> session(std::size_t length, std::size_t items, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, items - 1);
  std::vector<std::size_t> s(length);
  for (auto& v : s) v = pick(rng);
  return s;
}

ModelParams model(std::size_t dim, ReadoutKind readout = ReadoutKind::kSet2Set) {
  ModelConfig c;
  c.item_count = 1000;
  c.dim = dim;
  c.layers = 3;
  c.heads = 8;
  c.readout = readout;
  Rng rng(1);
  return make_model(c, 0.1, rng);
}

void BM_SessionGraphBuild(benchmark::State& state) {
  const auto s = session(static_cast<std::size_t>(state.range(0)), 50, 3);
  for (auto _ : state) benchmark::DoNotOptimize(SessionGraph::build(s));
}
BENCHMARK(BM_SessionGraphBuild)->Arg(10)->Arg(100);

void BM_WgatEncode(benchmark::State& state) {
  const auto params = model(static_cast<std::size_t>(state.range(0)));
  const auto g = build_graph(params.config, session(10, 1000, 4));
  for (auto _ : state) {
    ad::Tape tape(false);
    benchmark::DoNotOptimize(encode_nodes(tape, params, g));
  }
}
BENCHMARK(BM_WgatEncode)->Arg(32)->Arg(100);

void BM_Readout(benchmark::State& state) {
  const auto kind = static_cast<ReadoutKind>(state.range(0));
  const auto params = model(100, kind);
  const auto g = build_graph(params.config, session(10, 1000, 5));
  ad::Tape tape(false);
  const auto nodes = encode_nodes(tape, params, g);
  for (auto _ : state) {
    ad::Tape t(false);
    switch (kind) {
      case ReadoutKind::kSet2Set:
        benchmark::DoNotOptimize(set2set_readout(t, params.set2set, nodes));
        break;
      default:
        benchmark::DoNotOptimize(pool_readout(t, nodes, ad::Reduction::kMean));
    }
  }
  state.SetLabel(to_string(kind));
}
BENCHMARK(BM_Readout)
    ->Arg(static_cast<int>(ReadoutKind::kSet2Set))
    ->Arg(static_cast<int>(ReadoutKind::kMean));

void BM_Forward(benchmark::State& state) {
  const auto params = model(100);
  const auto g = build_graph(params.config, session(10, 1000, 6));
  for (auto _ : state) benchmark::DoNotOptimize(forward(params, g, 20));
}
BENCHMARK(BM_Forward);

void BM_ForwardBackwardBatch(benchmark::State& state) {
  const auto params = model(100);
  std::vector<TrainingExample> batch;
  for (std::uint64_t i = 0; i < 100; ++i) {
    auto s = session(2 + i % 9, 1000, 100 + i);
    const auto label = s.back();
    s.pop_back();
    batch.push_back({s, label});
  }
  for (auto _ : state) {
    for (auto& p : params.parameters()) {
      auto t = p.tensor;
      t.zero_grad();
    }
    benchmark::DoNotOptimize(accumulate_batch_gradients(params, batch));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch.size()));
}
BENCHMARK(BM_ForwardBackwardBatch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
