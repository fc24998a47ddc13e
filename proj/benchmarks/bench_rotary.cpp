#include <benchmark/benchmark.h>

#include "larope/boundmap.hpp"
#include "larope/rng.hpp"
#include "larope/rotary.hpp"

namespace {

void BM_RotateRows(benchmark::State& state) {
  const auto length = static_cast<std::size_t>(state.range(0));
  larope::RotaryConfig cfg{64, 10000.0, 10.0, larope::Variant::LARoPE};
  larope::Rng rng(1);
  const larope::Matrix x = rng.normal_matrix(length, cfg.dim);
  for (auto _ : state) benchmark::DoNotOptimize(larope::rotate_rows(x, cfg));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(length));
}
BENCHMARK(BM_RotateRows)->Arg(64)->Arg(256)->Arg(1024);

void BM_ScoreComplexLarope(benchmark::State& state) {
  larope::RotaryConfig cfg{static_cast<std::size_t>(state.range(0)), 10000.0, 10.0,
                           larope::Variant::LARoPE};
  larope::Rng rng(2);
  const auto q = rng.normal_matrix(1, cfg.dim);
  const auto k = rng.normal_matrix(1, cfg.dim);
  for (auto _ : state) {
    benchmark::DoNotOptimize(larope::score_complex_larope(q.row(0), k.row(0), 17, 64, 40, 256, cfg));
  }
}
BENCHMARK(BM_ScoreComplexLarope)->Arg(16)->Arg(64);

void BM_BoundGrid(benchmark::State& state) {
  larope::RotaryConfig cfg{64, 10000.0, 10.0, larope::Variant::LARoPE};
  for (auto _ : state) {
    benchmark::DoNotOptimize(larope::bound_grid(64, 256, cfg, larope::Variant::LARoPE,
                                                larope::SjMode::MagnitudeOfPartialSum));
  }
}
BENCHMARK(BM_BoundGrid)->Unit(benchmark::kMillisecond);

}  // namespace
