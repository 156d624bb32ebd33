#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "wlf/ccl.hpp"

namespace {

// n points scattered in a cube whose side grows with n, so density stays fixed.
std::vector<Eigen::Vector3d> cloud(std::size_t n) {
  std::mt19937_64 rng(n);
  std::uniform_real_distribution<double> u(0.0, std::cbrt(static_cast<double>(n)) * 0.3);
  std::vector<Eigen::Vector3d> pts(n);
  for (auto& p : pts) p = {u(rng), u(rng), u(rng)};
  return pts;
}

void BM_Ccl(benchmark::State& state) {
  const auto pts = cloud(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(wlf::ccl_cluster(pts, 0.6));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Ccl)->RangeMultiplier(4)->Range(256, 65536)->Complexity();

}  // namespace

BENCHMARK_MAIN();
