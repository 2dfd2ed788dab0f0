/* Copyright (c) 2026 The sdconv Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#include <benchmark/benchmark.h>

#include "sdconv/autodiff.hpp"
#include "sdconv/conv.hpp"
#include "sdconv/rng.hpp"

namespace {

using namespace sdconv;

constexpr std::size_t kChannels = 8;
constexpr std::size_t kExtent = 64;

Tensor input(std::uint64_t seed) {
  Rng r(seed);
  return random_uniform({4, kChannels, kExtent, kExtent}, -1, 1, r);
}

void BM_DilatedConv(benchmark::State& state) {
  const int dil = static_cast<int>(state.range(0));
  const Tensor x = input(1);
  Rng r(2);
  const ConvWeights w(random_uniform({kChannels, kChannels, 3, 3}, -1, 1, r));
  for (auto _ : state) benchmark::DoNotOptimize(dilated_conv2d(x, w, ConvSpec{3, dil}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.size()));
}
BENCHMARK(BM_DilatedConv)->Arg(1)->Arg(3)->Arg(5);

void BM_ConvBackwardWeights(benchmark::State& state) {
  const Tensor x = input(3);
  const Tensor gy = input(4);
  Tensor gw({kChannels, kChannels, 3, 3});
  for (auto _ : state) {
    gw.fill(0.0);
    kernels::conv_backward_weights(x, gy, 3, gw);
    benchmark::DoNotOptimize(gw.data().data());
  }
}
BENCHMARK(BM_ConvBackwardWeights);

void BM_Smooth2D(benchmark::State& state) {
  const auto kind = static_cast<FilterKind>(state.range(0));
  const int s = static_cast<int>(state.range(1));
  const SmoothingFilter f = build_smoothing_filter(kind, s, 1.0);
  const Tensor x = input(5);
  for (auto _ : state) benchmark::DoNotOptimize(smooth_channelwise(x, f));
}

void BM_SmoothSeparable(benchmark::State& state) {
  const auto kind = static_cast<FilterKind>(state.range(0));
  const int s = static_cast<int>(state.range(1));
  const SmoothingFilter f = build_smoothing_filter(kind, s, 1.0);
  const Tensor x = input(5);
  for (auto _ : state) benchmark::DoNotOptimize(smooth_separable(x, f));
}

void smoothing_args(benchmark::internal::Benchmark* b) {
  for (FilterKind k : {FilterKind::average, FilterKind::gaussian})
    for (int s : {3, 5, 7}) b->Args({static_cast<std::int64_t>(k), s});
}
BENCHMARK(BM_Smooth2D)->Apply(smoothing_args);
BENCHMARK(BM_SmoothSeparable)->Apply(smoothing_args);

void BM_FusedVersusTwoStage(benchmark::State& state) {
  const bool fused = state.range(0) != 0;
  const Tensor x = input(6);
  Rng r(7);
  const ConvWeights w(random_uniform({kChannels, kChannels, 3, 3}, -1, 1, r));
  const SmoothingFilter v = build_smoothing_filter(FilterKind::average, 3);
  const ConvSpec spec{3, 3};
  for (auto _ : state) {
    if (fused) {
      benchmark::DoNotOptimize(smoothed_dilated_conv2d_fused(x, v, w, spec));
    } else {
      benchmark::DoNotOptimize(smoothed_dilated_conv2d(x, v, w, spec));
    }
  }
  state.SetLabel(fused ? "fused" : "two-stage");
}
BENCHMARK(BM_FusedVersusTwoStage)->Arg(0)->Arg(1);

void BM_TapeConvStep(benchmark::State& state) {
  const Tensor x = input(8);
  Rng r(9);
  const Tensor w = random_uniform({kChannels, kChannels, 3, 3}, -1, 1, r);
  for (auto _ : state) {
    ad::Tape t;
    const ad::Var wv = t.parameter(w, "w");
    const ad::Var y = ad::dilated_conv2d(t, t.constant(x), wv, ConvSpec{3, 3});
    benchmark::DoNotOptimize(ad::backward(t, ad::sum_squares(t, y)));
  }
}
BENCHMARK(BM_TapeConvStep);

}  // namespace

BENCHMARK_MAIN();
