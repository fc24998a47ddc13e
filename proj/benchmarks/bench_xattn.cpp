#include <benchmark/benchmark.h>

#include "larope/rng.hpp"
#include "larope/toyalign.hpp"
#include "larope/xattn.hpp"

namespace {

void BM_ForwardBackward(benchmark::State& state) {
  const auto lk = static_cast<std::size_t>(state.range(0));
  larope::RotaryConfig cfg{16, 10000.0, 10.0, larope::Variant::LARoPE};
  larope::Rng rng(3);
  const auto layer = larope::CrossAttentionLayer::initialize(32, cfg, rng);
  const larope::EmbeddingSequence queries(rng.normal_matrix(3 * lk, 32));
  const larope::EmbeddingSequence keys(rng.normal_matrix(lk, 32));
  const larope::Matrix grad(3 * lk, 32, 1.0);
  for (auto _ : state) {
    const auto fw = larope::forward(layer, queries, keys);
    benchmark::DoNotOptimize(larope::backward(layer, fw.cache, grad));
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(8)->Arg(24)->Arg(64);

void BM_TrainStep(benchmark::State& state) {
  larope::TrainConfig cfg;
  auto run = larope::prepare_run(cfg);
  std::vector<larope::ToyAlignTask> batch;
  for (std::size_t i = 0; i < cfg.batch_size; ++i) {
    batch.push_back(larope::generate_task(run.task_rng, cfg, run.book));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(larope::train_step(run.layer, batch, 0.0));
  }
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMicrosecond);

}  // namespace
