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

#include <cmath>

#include "sdconv/error.hpp"
#include "sdconv/segmentation.hpp"

namespace sdconv {

namespace {

// Independent RNG sub-streams per parameter group, so switching smoothing
// modes does not perturb the convolution weights drawn for a seed.
constexpr std::uint64_t kStemStream = 1;
constexpr std::uint64_t kBlockStream = 16;
constexpr std::uint64_t kFilterStream = 256;
constexpr std::uint64_t kClassifierStream = 4096;

Tensor he_uniform(Shape shape, Rng rng) {
  const double fan_in = static_cast<double>(shape.c * shape.h * shape.w);
  const double bound = std::sqrt(6.0 / fan_in);
  return random_uniform(shape, -bound, bound, rng);
}

std::string block_name(std::size_t i, const char* what) {
  return "block" + std::to_string(i) + "." + what;
}

}  // namespace

std::string_view to_string(SmoothingMode mode) {
  switch (mode) {
    case SmoothingMode::none: return "none";
    case SmoothingMode::average: return "average";
    case SmoothingMode::gaussian: return "gaussian";
    case SmoothingMode::learned: return "learned";
    case SmoothingMode::aggregated: return "aggregated";
  }
  return "unknown";
}

std::optional<SmoothingMode> parse_smoothing_mode(std::string_view name) {
  for (SmoothingMode m : {SmoothingMode::none, SmoothingMode::average,
                          SmoothingMode::gaussian, SmoothingMode::learned,
                          SmoothingMode::aggregated}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

void ModelConfig::validate() const {
  if (input_channels < 1 || channels < 1) {
    throw ParameterError("channel counts must be positive");
  }
  if (classes < 2) throw ParameterError("need at least 2 classes");
  ConvSpec{kernel_size, 1}.validate();
  if (dilations.empty()) throw ParameterError("need at least one dilated block");
  for (int r : dilations) {
    ConvSpec{kernel_size, r}.validate();
    if (smoothing != SmoothingMode::none && r % 2 == 0) {
      throw ParameterError("smoothed blocks need odd dilation rates, got " +
                           std::to_string(r));
    }
  }
  if (smoothing == SmoothingMode::gaussian || smoothing == SmoothingMode::aggregated) {
    if (!(sigma > 0.0)) throw ParameterError("sigma must be > 0");
  }
}

ToyModel::ToyModel(ModelConfig cfg, Rng& rng) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const auto C = static_cast<std::size_t>(cfg_.channels);
  const auto K = static_cast<std::size_t>(cfg_.kernel_size);
  const auto in = static_cast<std::size_t>(cfg_.input_channels);

  params_.push_back({"stem.weight", he_uniform(Shape{C, in, 3, 3}, rng.split(kStemStream))});
  params_.push_back({"stem.bias", Tensor(Shape{1, C, 1, 1})});
  for (std::size_t i = 0; i < cfg_.dilations.size(); ++i) {
    const int r = cfg_.dilations[i];
    params_.push_back({block_name(i, "weight"),
                       he_uniform(Shape{C, C, K, K}, rng.split(kBlockStream + i))});
    params_.push_back({block_name(i, "bias"), Tensor(Shape{1, C, 1, 1})});
    Rng frng = rng.split(kFilterStream + i);
    switch (cfg_.smoothing) {
      case SmoothingMode::none:
        break;
      case SmoothingMode::average:
        fixed_.push_back(build_smoothing_filter(FilterKind::average, r));
        break;
      case SmoothingMode::gaussian:
        fixed_.push_back(build_smoothing_filter(FilterKind::gaussian, r, cfg_.sigma));
        break;
      case SmoothingMode::learned:
        params_.push_back({block_name(i, "filter"),
                           build_smoothing_filter(FilterKind::learned, r, std::nullopt, &frng)
                               .weights});
        break;
      case SmoothingMode::aggregated: {
        AggregatedFilter agg(r, cfg_.sigma, frng);
        params_.push_back({block_name(i, "logits"), agg.logits_tensor()});
        params_.push_back({block_name(i, "learned"), agg.learned_weights()});
        aggregated_.push_back(std::move(agg));
        break;
      }
    }
  }
  const auto classes = static_cast<std::size_t>(cfg_.classes);
  params_.push_back({"classifier.weight",
                     he_uniform(Shape{classes, C, 1, 1}, rng.split(kClassifierStream))});
  params_.push_back({"classifier.bias", Tensor(Shape{1, classes, 1, 1})});
}

std::size_t ToyModel::find(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  throw ParameterError("model has no parameter '" + name + "'");
}

void ToyModel::refresh() {
  for (std::size_t i = 0; i < aggregated_.size(); ++i) {
    aggregated_[i].set_logits(params_[find(block_name(i, "logits"))].value);
    aggregated_[i].set_learned_weights(params_[find(block_name(i, "learned"))].value);
  }
}

std::size_t ToyModel::parameter_count() const {
  std::size_t n = 0;
  for (const Parameter& p : params_) n += p.value.size();
  return n;
}

std::size_t ToyModel::smoothing_parameter_count() const {
  std::size_t n = 0;
  for (const Parameter& p : params_) {
    if (p.name.ends_with(".filter") || p.name.ends_with(".logits") ||
        p.name.ends_with(".learned")) {
      n += p.value.size();
    }
  }
  return n;
}

const SmoothingFilter& ToyModel::fixed_filter(std::size_t block) const {
  if (block >= fixed_.size()) {
    throw ParameterError("model has no fixed filter for block " + std::to_string(block));
  }
  return fixed_[block];
}

void ToyModel::set_fixed_filter(std::size_t block, SmoothingFilter filter) {
  if (block >= fixed_.size()) {
    throw ParameterError("model has no fixed filter for block " + std::to_string(block));
  }
  if (filter.size != fixed_[block].size) {
    throw ParameterError("replacement filter must keep size " +
                         std::to_string(fixed_[block].size));
  }
  fixed_[block] = std::move(filter);
}

const AggregatedFilter& ToyModel::aggregated_filter(std::size_t block) const {
  if (block >= aggregated_.size()) {
    throw ParameterError("model has no aggregated filter for block " +
                         std::to_string(block));
  }
  return aggregated_[block];
}

ToyModel::Graph ToyModel::forward(ad::Tape& tape, ad::Var input, bool trainable) const {
  Graph g;
  g.params.reserve(params_.size());
  for (const Parameter& p : params_) {
    g.params.push_back(trainable ? tape.parameter(p.value, p.name) : tape.constant(p.value));
  }
  g.scores = forward(tape, input, g.params);
  return g;
}

ad::Var ToyModel::forward(ad::Tape& tape, ad::Var input,
                          std::span<const ad::Var> params) const {
  if (tape.value(input).shape().c != static_cast<std::size_t>(cfg_.input_channels)) {
    throw ParameterError("input has " + std::to_string(tape.value(input).shape().c) +
                         " channels, model expects " +
                         std::to_string(cfg_.input_channels));
  }
  if (params.size() != params_.size()) {
    throw ParameterError("expected " + std::to_string(params_.size()) +
                         " parameter handles, got " + std::to_string(params.size()));
  }
  std::size_t next = 0;
  auto take = [&]() { return params[next++]; };

  ad::Var x = ad::dilated_conv2d(tape, input, take(), ConvSpec{3, 1});
  x = ad::relu(tape, ad::add_channel_bias(tape, x, take()));
  for (std::size_t i = 0; i < cfg_.dilations.size(); ++i) {
    const ConvSpec spec{cfg_.kernel_size, cfg_.dilations[i]};
    const ad::Var w = take();
    const ad::Var b = take();
    switch (cfg_.smoothing) {
      case SmoothingMode::none:
        break;
      case SmoothingMode::average:
      case SmoothingMode::gaussian:
        x = ad::smooth_fixed(tape, x, fixed_[i], cfg_.separable);
        break;
      case SmoothingMode::learned:
        x = ad::smooth(tape, x, take());
        break;
      case SmoothingMode::aggregated: {
        const ad::Var logits = take();
        const ad::Var learned = take();
        x = ad::smooth(tape, x, aggregated_[i].realize(tape, logits, learned));
        break;
      }
    }
    x = ad::dilated_conv2d(tape, x, w, spec);
    x = ad::relu(tape, ad::add_channel_bias(tape, x, b));
  }
  x = ad::dilated_conv2d(tape, x, take(), ConvSpec{1, 1});
  return ad::add_channel_bias(tape, x, take());
}

Tensor ToyModel::forward(const Tensor& batch) const {
  ad::Tape tape;
  const ad::Var in = tape.constant(batch);
  const Graph g = forward(tape, in, false);
  return tape.value(g.scores);
}

}  // namespace sdconv
