#include <benchmark/benchmark.h>

#include <random>

#include "ftvsr/attention.hpp"
#include "ftvsr/dct.hpp"
#include "ftvsr/degradation.hpp"
#include "ftvsr/frames.hpp"
#include "ftvsr/metrics.hpp"
#include "ftvsr/model.hpp"
#include "ftvsr/tokenizer.hpp"

using namespace ftvsr;

namespace {

Tensor random_frames(Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(0.0, 1.0);
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = d(rng);
  return Tensor::from(std::move(shape), std::move(v));
}

ModelConfig bench_model() {
  ModelConfig c;
  c.scale = 2;
  c.block = 4;
  c.token_block = 2;
  c.model_dim = 16;
  c.frequency_fusion = true;
  c.zero_init_output = false;
  return c;
}

}  // namespace

static void BM_BlockDct(benchmark::State& state) {
  const auto b = static_cast<std::size_t>(state.range(0));
  const Tensor frames = random_frames({4, 3, 64, 64}, 1);
  for (auto _ : state) benchmark::DoNotOptimize(from_spectral(to_spectral(frames, b)));
  state.SetItemsProcessed(state.iterations() * 4);
}
BENCHMARK(BM_BlockDct)->Arg(4)->Arg(8);

static void BM_Tokenize(benchmark::State& state) {
  const SpectralMap map = to_spectral(random_frames({4, 3, 64, 64}, 2), 8);
  for (auto _ : state) benchmark::DoNotOptimize(detokenize(tokenize(map, 2)));
}
BENCHMARK(BM_Tokenize);

static void BM_Lfa(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const auto n = static_cast<std::size_t>(state.range(0));
  const AttentionLayer layer = AttentionLayer::random({12, 12, 16, 2, 12, true}, rng);
  const Tensor grid = random_frames({1, n, 16, 12}, 4);
  NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(lfa(grid, layer));
}
BENCHMARK(BM_Lfa)->Arg(4)->Arg(16);

static void BM_ForwardFrame(benchmark::State& state) {
  const ModelParams params = ModelParams::init(bench_model());
  const Tensor lr = random_frames({2, 3, 16, 16}, 5);
  const HiddenState s0 = initial_state(params, 16, 16);
  NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(forward_frame(lr, 1, s0, params).sr);
}
BENCHMARK(BM_ForwardFrame);

static void BM_TrainStep(benchmark::State& state) {
  ModelParams params = ModelParams::init(bench_model());
  const Tensor hr = synthetic_clip(6, 10, 3, 32, 32);
  DegradationSpec spec;
  spec.scale = 2;
  spec.compression_q = 4.0;
  const std::vector<Clip> batch{{degrade(hr, spec, 0), hr}};
  Adam adam;
  for (auto _ : state) benchmark::DoNotOptimize(train_step(batch, params, adam, 1e-4));
  state.SetLabel("1 clip x 10 frames");
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

static void BM_Degrade(benchmark::State& state) {
  const Tensor hr = synthetic_clip(7, 4, 3, 64, 64);
  DegradationSpec spec;
  spec.scale = 4;
  spec.noise_sigma = 0.02;
  spec.compression_q = 4.0;
  for (auto _ : state) benchmark::DoNotOptimize(degrade(hr, spec, 1));
}
BENCHMARK(BM_Degrade);

static void BM_Ssim(benchmark::State& state) {
  const Tensor a = random_frames({3, 64, 64}, 8), b = random_frames({3, 64, 64}, 9);
  for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b));
}
BENCHMARK(BM_Ssim);

BENCHMARK_MAIN();
