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
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdconv/bench.hpp"
#include "sdconv/gridding.hpp"
#include "sdconv/segmentation.hpp"

namespace sdconv::cli {

/// Malformed or inconsistent run configuration (exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DatasetSection {
  DatasetConfig data;
  std::uint64_t seed = 1;
};

struct ExperimentSection {
  std::vector<SmoothingMode> modes{SmoothingMode::none, SmoothingMode::average,
                                   SmoothingMode::gaussian, SmoothingMode::learned};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<double> noise_levels{0.5};
  std::size_t train_count = 64;
  std::size_t eval_count = 32;
  /// Directory written by `generate`; replaces per-seed generated data.
  std::optional<std::filesystem::path> dataset;
};

struct StackSection {
  int layers = 2;
  int kernel_size = 3;
  int dilation = 2;
  FilterKind smoothing = FilterKind::none;
  /// Defaults to the dilation rate.
  std::optional<int> filter_size;

  LayerStack stack() const;
};

struct AnalysisSection {
  Extent extent{32, 32};
  std::vector<StackSection> stacks{StackSection{}};
  bool art = false;
};

struct BenchSection {
  std::vector<BenchVariant> variants;
  BenchOptions options;
};

struct GradcheckSection {
  double tolerance = 1e-4;
  double step = 1e-5;
  std::vector<SmoothingMode> modes{SmoothingMode::none, SmoothingMode::average,
                                   SmoothingMode::gaussian, SmoothingMode::learned,
                                   SmoothingMode::aggregated};
  int channels = 2;
  int extent = 12;
  int batch_size = 1;
  std::uint64_t seed = 1;
};

struct RunConfig {
  std::filesystem::path output_dir = "sdconv-out";
  DatasetSection dataset;
  ModelConfig model;
  TrainConfig training;
  ExperimentSection experiment;
  AnalysisSection analysis;
  BenchSection bench;
  GradcheckSection gradcheck;
};

RunConfig default_config();

/// Parses a JSON document. Unknown keys, wrong types and out-of-range values
/// raise ConfigError naming the offending key path.
RunConfig parse_config(const std::string& text,
                       const std::vector<std::string>& overrides = {});
RunConfig load_config(const std::filesystem::path& file,
                      const std::vector<std::string>& overrides = {});

}  // namespace sdconv::cli
