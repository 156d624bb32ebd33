#include <benchmark/benchmark.h>

#include "wlf/dcs.hpp"
#include "wlf/range_image.hpp"
#include "wlf/synth.hpp"

namespace {

wlf::RangeImage dense_image() {
  auto cfg = wlf::SceneConfig::dense();
  cfg.seed = 1;
  const auto scene = wlf::generate_scene(cfg);
  return wlf::build_range_image(scene.bundle.frame, cfg.beams, cfg.columns);
}

void BM_RangeImage(benchmark::State& state) {
  auto cfg = wlf::SceneConfig::dense();
  cfg.seed = 1;
  const auto scene = wlf::generate_scene(cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(wlf::build_range_image(scene.bundle.frame, cfg.beams, cfg.columns));
  }
}
BENCHMARK(BM_RangeImage)->Unit(benchmark::kMillisecond);

void BM_DcsSimplified(benchmark::State& state) {
  const auto img = dense_image();
  for (auto _ : state) benchmark::DoNotOptimize(wlf::dcs_simplified(img, 0.24));
}
BENCHMARK(BM_DcsSimplified)->Unit(benchmark::kMillisecond);

void BM_DcsDynamic(benchmark::State& state) {
  const auto img = dense_image();
  const wlf::DcsConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(wlf::dcs_dynamic(img, cfg));
}
BENCHMARK(BM_DcsDynamic)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
