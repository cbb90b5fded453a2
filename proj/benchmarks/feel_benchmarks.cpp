#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "feel/datagen.hpp"
#include "feel/diversity.hpp"
#include "feel/learning.hpp"
#include "feel/network.hpp"

namespace {

using namespace feel;

std::vector<double> series(std::size_t n) {
  return datagen::make_timeseries(datagen::SeriesKind::ar_noise, n, 1.0, 3);
}

void BM_SampleEntropy(benchmark::State& state) {
  const auto x = series(static_cast<std::size_t>(state.range(0)));
  const double r = 0.2 * diversity::standard_deviation(x);
  for (auto _ : state) benchmark::DoNotOptimize(diversity::sample_entropy(x, 2, r));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SampleEntropy)->RangeMultiplier(2)->Range(64, 1024)->Complexity();

void BM_ApproximateEntropy(benchmark::State& state) {
  const auto x = series(static_cast<std::size_t>(state.range(0)));
  const double r = 0.2 * diversity::standard_deviation(x);
  for (auto _ : state) benchmark::DoNotOptimize(diversity::approximate_entropy(x, 2, r));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ApproximateEntropy)->RangeMultiplier(2)->Range(64, 1024)->Complexity();

void BM_MeanPairwise(benchmark::State& state) {
  const auto pool = datagen::make_classification_pool(4, 16, 64, 2.0, 1);
  const auto metric = diversity::DissimilarityMetric::cosine();
  const auto sample = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(diversity::mean_pairwise_dissimilarity(pool.features, metric, sample, 9));
  }
}
BENCHMARK(BM_MeanPairwise)->Arg(32)->Arg(64)->Arg(256);

void BM_LocalTrain(benchmark::State& state) {
  const auto data = datagen::make_classification_pool(10, 10, static_cast<int>(state.range(0)) / 10, 2.0, 1);
  const auto model = learning::init_model(10, 10, 1);
  learning::TrainConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(learning::local_train(model, data, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LocalTrain)->Arg(100)->Arg(1000)->Arg(10000);

void BM_EqualizeCompletion(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  std::vector<network::LinkDemand> demands(static_cast<std::size_t>(state.range(0)));
  for (auto& d : demands) d = {u(rng), 1e5, 1.0 + 6.0 * u(rng)};
  for (auto _ : state) benchmark::DoNotOptimize(network::equalize_completion(demands, 1e6));
}
BENCHMARK(BM_EqualizeCompletion)->Arg(10)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
