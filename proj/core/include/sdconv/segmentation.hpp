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
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdconv/aggregation.hpp"
#include "sdconv/autodiff.hpp"
#include "sdconv/conv.hpp"
#include "sdconv/gridding.hpp"
#include "sdconv/rng.hpp"
#include "sdconv/tensor.hpp"

namespace sdconv {

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

enum class ShapeKind { rectangle, disc };

struct ShapeRecord {
  ShapeKind kind = ShapeKind::rectangle;
  int label = 0;
  int scale = 1;
  // Bounding box, inclusive top-left, exclusive bottom-right.
  int top = 0;
  int left = 0;
  int bottom = 0;
  int right = 0;
};

struct SynthSample {
  Tensor image;             // (1, channels, H, W)
  std::vector<int> labels;  // H * W class ids, 0 is background
  double noise_level = 0.0;
  std::vector<ShapeRecord> shapes;

  int height() const { return static_cast<int>(image.shape().h); }
  int width() const { return static_cast<int>(image.shape().w); }
};

struct DatasetConfig {
  std::size_t count = 64;
  Extent extent{64, 64};
  int classes = 4;
  int channels = 1;
  double noise_level = 0.5;
};

/// Base intensity of class `label` out of `classes` (background is 0).
double class_intensity(int label, int classes);

/// 1-4 non-overlapping rectangles / discs per image at scales {1, 2, 4},
/// piecewise-constant class intensities plus N(0, noise_level^2) pixel noise.
/// Labels are noise-free.
std::vector<SynthSample> generate_dataset(const DatasetConfig& cfg, Rng& rng);

/// Images stacked to (N, C, H, W) and labels to (N, 1, H, W).
Tensor stack_images(std::span<const SynthSample> data);
Tensor stack_labels(std::span<const SynthSample> data);
std::vector<SynthSample> unstack_dataset(const Tensor& images, const Tensor& labels,
                                         double noise_level);

/// One JSON object per line: index, noise level, shapes and class histogram.
void write_dataset_metadata(std::ostream& os, std::span<const SynthSample> data,
                            int classes);

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

enum class SmoothingMode { none, average, gaussian, learned, aggregated };

std::string_view to_string(SmoothingMode mode);
std::optional<SmoothingMode> parse_smoothing_mode(std::string_view name);

struct ModelConfig {
  int input_channels = 1;
  int channels = 8;
  int classes = 4;
  int kernel_size = 3;
  std::vector<int> dilations{3, 3, 5};
  double sigma = 1.0;
  SmoothingMode smoothing = SmoothingMode::none;
  /// Fixed filters (average / gaussian) use the two-pass path.
  bool separable = true;

  void validate() const;
};

struct Parameter {
  std::string name;
  Tensor value;
};

/// Stem 3x3 conv, dilated blocks (smoothing -> dilated conv -> bias -> relu)
/// and a 1x1 classifier, all zero-same padded.
class ToyModel {
 public:
  ToyModel(ModelConfig cfg, Rng& rng);

  const ModelConfig& config() const { return cfg_; }

  /// Class scores (N, classes, H, W).
  Tensor forward(const Tensor& batch) const;

  struct Graph {
    ad::Var scores;
    std::vector<ad::Var> params;  // parallel to parameters()
  };
  /// Records the forward pass. Parameters become tape parameters when
  /// `trainable`, constants otherwise.
  Graph forward(ad::Tape& tape, ad::Var input, bool trainable) const;
  /// Records the forward pass with caller-supplied parameter handles, one per
  /// parameters() entry and in the same order.
  ad::Var forward(ad::Tape& tape, ad::Var input, std::span<const ad::Var> params) const;

  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  /// Re-derives cached filter state after parameters() was modified.
  void refresh();

  std::size_t parameter_count() const;
  /// Trainable parameters that belong to smoothing filters.
  std::size_t smoothing_parameter_count() const;

  std::size_t blocks() const { return cfg_.dilations.size(); }
  /// Fixed filter of a block (average / gaussian modes).
  const SmoothingFilter& fixed_filter(std::size_t block) const;
  void set_fixed_filter(std::size_t block, SmoothingFilter filter);
  /// Aggregated filter of a block (aggregated mode), synced with parameters().
  const AggregatedFilter& aggregated_filter(std::size_t block) const;

 private:
  std::size_t find(const std::string& name) const;

  ModelConfig cfg_;
  std::vector<Parameter> params_;
  std::vector<SmoothingFilter> fixed_;
  std::vector<AggregatedFilter> aggregated_;
};

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::int64_t steps = 2000;
  int batch_size = 4;
  std::uint64_t seed = 1;
  int crop_size = 64;
  /// Alpha trajectory sampling interval (aggregated mode).
  std::int64_t log_interval = 100;

  void validate() const;
};

/// Stateful SGD-with-momentum loop, one step at a time.
class Trainer {
 public:
  Trainer(ToyModel& model, std::span<const SynthSample> data, const TrainConfig& cfg);

  /// Samples a batch, runs forward + backward + update. Returns the loss.
  /// Throws TrainingError on a non-finite loss.
  double step();

  std::int64_t steps_done() const { return steps_done_; }
  /// One trajectory per block; empty unless the model is aggregated.
  const std::vector<AlphaTrajectory>& trajectories() const { return trajectories_; }

 private:
  void sample_batch();
  void record_trajectories();

  ToyModel& model_;
  std::span<const SynthSample> data_;
  TrainConfig cfg_;
  Rng rng_;
  std::vector<Tensor> velocity_;
  Tensor batch_;
  std::vector<int> labels_;
  std::int64_t steps_done_ = 0;
  std::vector<AlphaTrajectory> trajectories_;
};

struct TrainResult {
  std::vector<double> losses;
  std::vector<AlphaTrajectory> trajectories;
  double sec_per_step = 0.0;
};

TrainResult train(ToyModel& model, std::span<const SynthSample> data,
                  const TrainConfig& cfg);

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct Metrics {
  std::vector<std::optional<double>> per_class_iou;  // nullopt: empty union
  double miou = 0.0;
};

/// Dataset-level intersection / union counts per class.
class IouAccumulator {
 public:
  explicit IouAccumulator(int classes);

  void add(std::span<const int> predicted, std::span<const int> truth);
  Metrics metrics() const;

 private:
  int classes_;
  std::vector<std::uint64_t> intersection_;
  std::vector<std::uint64_t> union_;
};

Metrics compute_metrics(std::span<const int> predicted, std::span<const int> truth,
                        int classes);

/// Per-pixel argmax over classes (lowest class id wins ties).
std::vector<int> argmax_labels(const Tensor& scores);

Metrics evaluate(const ToyModel& model, std::span<const SynthSample> data);

// ---------------------------------------------------------------------------
// Mode comparison
// ---------------------------------------------------------------------------

struct ExperimentConfig {
  std::vector<SmoothingMode> modes;
  std::vector<std::uint64_t> seeds;
  DatasetConfig train_data;
  std::size_t eval_count = 32;
  ModelConfig model;
  TrainConfig train;
};

struct CellResult {
  SmoothingMode mode = SmoothingMode::none;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  Metrics metrics;
  double sec_per_step = 0.0;
  std::vector<double> losses;
  std::vector<AlphaTrajectory> trajectories;
};

struct ModeSummary {
  SmoothingMode mode = SmoothingMode::none;
  std::size_t runs = 0;
  std::size_t failures = 0;
  double mean_miou = 0.0;
  double std_miou = 0.0;  // sample standard deviation
  double mean_sec_per_step = 0.0;
};

struct ComparisonTable {
  int classes = 0;
  std::vector<CellResult> cells;
  std::vector<ModeSummary> summary;

  const ModeSummary& summary_for(SmoothingMode mode) const;
  bool any_failed() const;
  /// mode,seed,miou,iou_class_0..iou_class_{C-1},sec_per_step
  void write_csv(std::ostream& os) const;
  void write_summary_csv(std::ostream& os) const;
};

/// Fixed-seed train / eval split for one experiment cell.
struct CellData {
  std::vector<SynthSample> train;
  std::vector<SynthSample> eval;
};
CellData make_cell_data(const ExperimentConfig& cfg, std::uint64_t seed);

/// Trains and evaluates every (mode, seed) cell. A failing cell is recorded
/// and the sweep continues. `provided` replaces the generated data for every
/// seed; `cancelled` is polled between cells.
ComparisonTable compare_modes(const ExperimentConfig& cfg,
                              const CellData* provided = nullptr,
                              const std::function<bool()>& cancelled = {},
                              const std::function<void(const CellResult&)>& on_cell = {});

}  // namespace sdconv
