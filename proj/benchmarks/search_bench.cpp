#include <benchmark/benchmark.h>

#include <random>

#include "umr/embedding.hpp"
#include "umr/infonce.hpp"
#include "umr/search.hpp"

namespace {

umr::EmbeddingMatrix random_matrix(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> dist(0.f, 1.f);
  std::vector<float> v(n * d);
  for (auto& x : v) x = dist(rng);
  return umr::EmbeddingMatrix(d, std::move(v)).normalized_copy();
}

// args: queries, candidates, dim, workers
void BM_TopK(benchmark::State& state) {
  const auto q = random_matrix(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(2)), 1);
  const auto c = random_matrix(static_cast<std::size_t>(state.range(1)), static_cast<std::size_t>(state.range(2)), 2);
  umr::SearchOptions opts;
  opts.workers = static_cast<std::size_t>(state.range(3));
  for (auto _ : state) benchmark::DoNotOptimize(umr::topk(q, c, 10, {}, opts));
  const double pairs = static_cast<double>(state.range(0)) * static_cast<double>(state.range(1));
  state.counters["pairs/s"] = benchmark::Counter(pairs, benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_TopK)
    ->Args({100, 10000, 128, 1})
    ->Args({100, 100000, 128, 1})
    ->Args({1000, 100000, 128, 1})
    ->Args({100, 100000, 128, 4})
    ->UseRealTime()
    ->Unit(benchmark::kMillisecond);

void BM_SimilarityMatrix(benchmark::State& state) {
  const auto q = random_matrix(256, static_cast<std::size_t>(state.range(1)), 3);
  const auto c = random_matrix(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)), 4);
  umr::SimilarityOptions opts;
  opts.accumulate_double = state.range(2) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(umr::similarity_matrix(q, c, opts));
  state.counters["pairs/s"] =
      benchmark::Counter(256.0 * static_cast<double>(state.range(0)), benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_SimilarityMatrix)->Args({4096, 128, 0})->Args({4096, 128, 1})->Unit(benchmark::kMillisecond);

void BM_InfoNceBackward(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> dist(0.0, 1.0);
  const auto d = static_cast<std::size_t>(state.range(0));
  auto vec = [&] {
    std::vector<double> v(d);
    for (auto& x : v) x = dist(rng);
    return v;
  };
  umr::LossBatch b{vec(), vec(), {}};
  for (int k = 0; k < 8; ++k) b.negatives.push_back(vec());
  const umr::LossConfig cfg{0.03, 8, false};
  for (auto _ : state) benchmark::DoNotOptimize(umr::infonce_backward(b, cfg));
}
BENCHMARK(BM_InfoNceBackward)->Arg(16)->Arg(1536);

}  // namespace

BENCHMARK_MAIN();
