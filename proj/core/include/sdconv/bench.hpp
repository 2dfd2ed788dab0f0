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

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sdconv/segmentation.hpp"

namespace sdconv {

/// A smoothing mode plus the implementation used for fixed filters.
struct BenchVariant {
  std::string name;
  SmoothingMode mode = SmoothingMode::none;
  bool separable = true;
};

/// Accepts the mode names plus "average-2d", "average-separable",
/// "gaussian-2d" and "gaussian-separable".
std::optional<BenchVariant> parse_bench_variant(std::string_view name);

struct BenchOptions {
  int reps = 3;
  int warmup = 5;
  int steps = 100;
  std::size_t dataset_size = 16;
};

struct BenchResult {
  std::string variant;
  double median_ms = 0.0;
  double iqr_ms = 0.0;
  int steps_measured = 0;
  int warmup = 0;
  double overhead_pct = 0.0;
  std::size_t param_count = 0;
  std::uint64_t flops_per_step = 0;
  std::vector<double> samples_ms;
};

struct BenchReport {
  /// Pooled over repetitions, sorted by median.
  std::vector<BenchResult> results;
  /// One entry per repetition, in variant input order.
  std::vector<std::vector<BenchResult>> per_rep;
  /// True when every pairwise median relation outside the tie band holds in
  /// every repetition.
  bool ordering_stable = true;

  const BenchResult& result(std::string_view variant) const;
  /// variant,median_ms,iqr_ms,overhead_pct,param_count,flops_per_step
  void write_csv(std::ostream& os) const;
  void write_summary(std::ostream& os) const;
};

/// Relative median difference below which two variants count as tied for
/// ordering stability.
inline constexpr double kOrderingTieBand = 0.02;

/// Median and interquartile range (linear interpolation between order stats).
double median(std::vector<double> v);
double interquartile_range(std::vector<double> v);

/// Times whole training steps (forward + backward + update) of every variant
/// on identical data and seeds. Requires a "none" variant as the baseline.
BenchReport bench_variants(const std::vector<BenchVariant>& variants,
                           const ModelConfig& model, const TrainConfig& train,
                           const BenchOptions& options);

/// Multiply-adds of one zero-same K x K convolution layer.
std::uint64_t conv_macs(int kernel_size, int in_channels, int out_channels,
                        const Extent& extent);

/// Multiply-adds of one forward pass over a single image.
std::uint64_t flop_estimate(SmoothingMode mode, bool separable, const ModelConfig& model,
                            const Extent& extent);

/// Multiply-adds of one training step: forward, input and weight gradients
/// (3x the convolution terms), smoothing forward plus input gradient, plus the
/// filter gradient for trainable filters. Scaled by batch size.
std::uint64_t train_step_flops(SmoothingMode mode, bool separable,
                               const ModelConfig& model, const Extent& extent,
                               int batch_size);

/// Trainable parameter count of the model a config would build.
std::size_t parameter_census(const ModelConfig& model);

}  // namespace sdconv
