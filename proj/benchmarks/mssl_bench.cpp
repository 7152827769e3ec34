#include <benchmark/benchmark.h>

#include <random>

#include "mssl/metrics.hpp"
#include "mssl/models.hpp"
#include "mssl/phantom.hpp"
#include "mssl/uad.hpp"

using namespace mssl;

static void BM_MedianFilter(benchmark::State& state) {
  const auto n = state.range(0);
  Volume r(Shape3::cube(n), 0.0f);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (auto& v : r.values()) v = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(postprocess_residual(r, 5));
  state.SetItemsProcessed(state.iterations() * n * n * n);
}
BENCHMARK(BM_MedianFilter)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_Auprc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s(n);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = u(rng);
    y[i] = i % 3 == 0;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(auroc(s, y));
    benchmark::DoNotOptimize(auprc(s, y));
  }
}
BENCHMARK(BM_Auprc)->Arg(1000)->Arg(100000);

static void BM_PhantomVolume(benchmark::State& state) {
  auto cfg = PhantomConfig::for_grid(state.range(0));
  cfg.n_patients = 1;
  cfg.anomaly_fraction = 1.0;
  for (auto _ : state) benchmark::DoNotOptimize(generate_dataset(cfg));
}
BENCHMARK(BM_PhantomVolume)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_ForwardBackward(benchmark::State& state) {
  torch::set_num_threads(1);
  const auto n = state.range(0);
  const auto x = torch::rand({8, 1, n, n, n});
  const auto enc = micro_encoder(n);
  Cae cae(micro_cae(n));
  ResUNet net(enc, DecoderSpec::mirror(enc));
  Classifier clf(enc, head_for(enc, 16));
  for (auto _ : state) {
    switch (state.range(1)) {
      case 0: cae->forward(x).sub(x).abs().mean().backward(); break;
      case 1: net->forward(x).abs().mean().backward(); break;
      default: clf->forward(x).abs().mean().backward(); break;
    }
  }
}
// Second argument: 0 autoencoder, 1 encoder-decoder, 2 classifier; batch of 8.
BENCHMARK(BM_ForwardBackward)->Args({32, 0})->Args({32, 1})->Args({32, 2})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
