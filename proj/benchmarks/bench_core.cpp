#include <benchmark/benchmark.h>

#include <complex>

#include "dtpnet/dsp.hpp"
#include "dtpnet/model.hpp"
#include "dtpnet/rng.hpp"
#include "dtpnet/signal.hpp"
#include "dtpnet/trainer.hpp"

using namespace dtp;

namespace {

template <typename T>
Tensor<T> random_tensor(std::vector<int> shape, Rng& rng) {
  Tensor<T> t(std::move(shape));
  for (auto& v : t.values) v = static_cast<T>(rng.uniform(-1.0, 1.0));
  return t;
}

DTPNetConfig desk_config() {
  DTPNetConfig c;
  c.encoder_filters = 64;
  c.encoder_kernel = 16;
  c.conv_channels = 32;
  c.conv_kernel = 3;
  c.blocks_per_pyramid = 4;
  c.pyramid_repeats = 2;
  c.growth_channels = 16;
  return c;
}

void BM_Conv1dForward(benchmark::State& state) {
  Rng rng(1);
  const int channels = static_cast<int>(state.range(0));
  ConvSpec spec;
  spec.in_channels = channels;
  spec.out_channels = channels;
  spec.kernel = 3;
  spec.pad_left = 1;
  spec.pad_right = 1;
  const auto x = random_tensor<float>({channels, 256}, rng);
  const auto w = random_tensor<float>({channels, channels, 3}, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(conv1d(x, w, spec));
  }
  state.SetItemsProcessed(state.iterations() * channels * channels * 3 * 256);
}
BENCHMARK(BM_Conv1dForward)->Arg(16)->Arg(64)->Arg(128);

void BM_Conv1dBackward(benchmark::State& state) {
  Rng rng(2);
  const int channels = static_cast<int>(state.range(0));
  ConvSpec spec;
  spec.in_channels = channels;
  spec.out_channels = channels;
  spec.kernel = 3;
  spec.pad_left = 1;
  spec.pad_right = 1;
  const auto x = random_tensor<float>({channels, 256}, rng);
  const auto w = random_tensor<float>({channels, channels, 3}, rng);
  const auto g = random_tensor<float>({channels, 256}, rng);
  for (auto _ : state) {
    Tensor<float> gx(x.shape);
    Tensor<float> gw(w.shape);
    conv1d_backward(x, w, spec, g, &gx, &gw);
    benchmark::DoNotOptimize(gx);
  }
}
BENCHMARK(BM_Conv1dBackward)->Arg(16)->Arg(64);

void BM_ModelForward(benchmark::State& state) {
  Rng rng(3);
  const auto model = build<float>(desk_config(), 7);
  const auto x = random_tensor<float>({1, 512}, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward(model, x));
  }
}
BENCHMARK(BM_ModelForward);

void BM_TrainStep(benchmark::State& state) {
  const auto config = desk_config();
  auto model = build<float>(config, 7);
  DatasetParams params;
  params.count = 40;
  params.segment_len = 512;
  params.sample_rate_hz = 256.0;
  params.seed = 11;
  const DatasetSplit split = make_dataset(params);

  TrainConfig tc;
  tc.batch_size = 32;
  tc.max_epochs = 1;
  tc.seed = 1;
  for (auto _ : state) {
    auto fresh = model;
    const TrainResult r = train(fresh, split, tc);
    benchmark::DoNotOptimize(r.history);
  }
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

void BM_Fft(benchmark::State& state) {
  Rng rng(4);
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  std::vector<std::complex<double>> x(n);
  for (auto& c : x) c = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  for (auto _ : state) {
    auto buf = x;
    fft(buf);
    benchmark::DoNotOptimize(buf);
  }
}
BENCHMARK(BM_Fft)->Arg(256)->Arg(4096);

void BM_GenCleanEeg(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(gen_clean_eeg(8, 512, 256.0, 5));
  }
  state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_GenCleanEeg);

}  // namespace

BENCHMARK_MAIN();
