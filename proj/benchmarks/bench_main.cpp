#include <benchmark/benchmark.h>

#include <Eigen/Core>

#include "sscil/augment/augmentation.hpp"
#include "sscil/common/rng.hpp"
#include "sscil/data/kmeans.hpp"
#include "sscil/objectives/losses.hpp"
#include "sscil/train/exemplar_memory.hpp"

namespace {

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  sscil::Rng rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

// Batch of K source images -> 2K projected views.
void BM_NtXent(benchmark::State& state) {
  const auto k = state.range(0);
  const Eigen::MatrixXd z = gaussian(2 * k, 128, 1);
  for (auto _ : state) benchmark::DoNotOptimize(sscil::nt_xent_loss(z, 0.1));
  state.SetItemsProcessed(state.iterations() * k);
}
BENCHMARK(BM_NtXent)->Arg(32)->Arg(256)->Arg(1024);

void BM_KMeans(benchmark::State& state) {
  const Eigen::MatrixXd points = gaussian(state.range(0), 64, 2);
  for (auto _ : state) benchmark::DoNotOptimize(sscil::kmeans(points, {.k = 10, .seed = 3}));
}
BENCHMARK(BM_KMeans)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_Herding(benchmark::State& state) {
  const Eigen::MatrixXd features = gaussian(state.range(0), 512, 4);
  for (auto _ : state) benchmark::DoNotOptimize(sscil::herding_select(features, 20));
}
BENCHMARK(BM_Herding)->Arg(500)->Arg(1300);

void BM_AugmentPair(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  sscil::Rng rng(5);
  sscil::Image img(side, side);
  for (auto& v : img.data()) v = static_cast<float>(rng.uniform());
  const auto cfg = sscil::byol_augmentation(side);
  std::uint64_t key = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sscil::augment_pair(img, cfg, ++key));
}
BENCHMARK(BM_AugmentPair)->Arg(32)->Arg(224);

}  // namespace

BENCHMARK_MAIN();
