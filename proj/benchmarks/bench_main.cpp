#include <benchmark/benchmark.h>

#include <vector>

#include "spinchain/config.hpp"
#include "spinchain/estimators.hpp"
#include "spinchain/rng.hpp"
#include "spinchain/samplers.hpp"
#include "spinchain/transfer.hpp"

using namespace spinchain;

namespace {

Model default_model(std::size_t n) { return Model(ModelConfig::default_model(n).build()); }

void BM_TransferMeans(benchmark::State& state) {
  const TransferEngine engine(default_model(static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(engine.gce_site_means(0.1));
}
BENCHMARK(BM_TransferMeans)->Arg(16)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_CharacteristicFunction(benchmark::State& state) {
  const TransferEngine engine(default_model(static_cast<std::size_t>(state.range(0))));
  const auto means = engine.gce_site_means(0.1);
  for (auto _ : state) benchmark::DoNotOptimize(engine.characteristic_function(0.1, 1.5, means));
}
BENCHMARK(BM_CharacteristicFunction)->Arg(16)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_GceSweep(benchmark::State& state) {
  const auto model = default_model(static_cast<std::size_t>(state.range(0)));
  SamplerConfig config;
  auto chain = initialize(model, Ensemble::Gce, 0.0, config);
  for (auto _ : state) gce_sweep(model, 0.1, chain);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GceSweep)->Arg(64)->Arg(512);

void BM_CeSweep(benchmark::State& state) {
  const auto model = default_model(static_cast<std::size_t>(state.range(0)));
  SamplerConfig config;
  auto chain = initialize(model, Ensemble::Ce, 0.1, config);
  for (auto _ : state) ce_sweep(model, chain);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CeSweep)->Arg(64)->Arg(512);

void BM_EffectiveSampleSize(benchmark::State& state) {
  CounterRng rng(1, 0);
  std::vector<double> xs(static_cast<std::size_t>(state.range(0)));
  double x = 0.0;
  for (auto& v : xs) v = x = 0.9 * x + rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(effective_sample_size(xs));
}
BENCHMARK(BM_EffectiveSampleSize)->Arg(100000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
