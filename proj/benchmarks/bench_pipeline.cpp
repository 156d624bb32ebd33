#include <benchmark/benchmark.h>

#include "wlf/pipeline.hpp"
#include "wlf/synth.hpp"

namespace {

void BM_ProcessFrame(benchmark::State& state, const char* stages) {
  auto scene_cfg = wlf::SceneConfig::dense();
  scene_cfg.seed = 3;
  const auto bundle = wlf::generate_scene(scene_cfg).bundle;
  wlf::PipelineConfig cfg;
  cfg.stages = wlf::parse_stages(stages);
  for (auto _ : state) benchmark::DoNotOptimize(wlf::process_frame(bundle, cfg));
}
BENCHMARK_CAPTURE(BM_ProcessFrame, spg, "spg")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_ProcessFrame, spg_pvc_rsc, "spg,pvc,rsc")->Unit(benchmark::kMillisecond);

void BM_GenerateScene(benchmark::State& state) {
  auto cfg = wlf::SceneConfig::dense();
  for (auto _ : state) {
    cfg.seed++;
    benchmark::DoNotOptimize(wlf::generate_scene(cfg));
  }
}
BENCHMARK(BM_GenerateScene)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
