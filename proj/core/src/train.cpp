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

#include <chrono>
#include <cmath>

#include "sdconv/error.hpp"
#include "sdconv/segmentation.hpp"

namespace sdconv {

namespace {

constexpr std::uint64_t kBatchStream = 7;

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ParameterError("learning rate must be finite and >= 0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ParameterError("momentum must lie in [0, 1)");
  }
  if (steps < 1) throw ParameterError("steps must be positive");
  if (batch_size < 1) throw ParameterError("batch size must be positive");
  if (crop_size < 1) throw ParameterError("crop size must be positive");
  if (log_interval < 1) throw ParameterError("log interval must be positive");
}

Trainer::Trainer(ToyModel& model, std::span<const SynthSample> data,
                 const TrainConfig& cfg)
    : model_(model), data_(data), cfg_(cfg), rng_(Rng(cfg.seed).split(kBatchStream)) {
  cfg_.validate();
  if (data_.empty()) throw ParameterError("training set is empty");
  for (const SynthSample& s : data_) {
    if (s.height() < cfg_.crop_size || s.width() < cfg_.crop_size) {
      throw ParameterError("crop size " + std::to_string(cfg_.crop_size) +
                           " exceeds sample extent " + std::to_string(s.height()) + "x" +
                           std::to_string(s.width()));
    }
  }
  for (const Parameter& p : model_.parameters()) velocity_.push_back(zeros_like(p.value));
  if (model_.config().smoothing == SmoothingMode::aggregated) {
    trajectories_.resize(model_.blocks());
    record_trajectories();
  }
}

void Trainer::sample_batch() {
  const auto B = static_cast<std::size_t>(cfg_.batch_size);
  const auto crop = static_cast<std::size_t>(cfg_.crop_size);
  const std::size_t C = data_.front().image.shape().c;
  batch_ = Tensor(Shape{B, C, crop, crop});
  labels_.assign(B * crop * crop, 0);
  for (std::size_t b = 0; b < B; ++b) {
    const SynthSample& s = data_[rng_.below(data_.size())];
    const auto H = static_cast<std::size_t>(s.height());
    const auto W = static_cast<std::size_t>(s.width());
    const std::size_t top = rng_.below(H - crop + 1);
    const std::size_t left = rng_.below(W - crop + 1);
    for (std::size_t c = 0; c < C; ++c) {
      const double* src = s.image.plane(0, c);
      double* dst = batch_.plane(b, c);
      for (std::size_t h = 0; h < crop; ++h) {
        for (std::size_t w = 0; w < crop; ++w) {
          dst[h * crop + w] = src[(top + h) * W + left + w];
        }
      }
    }
    int* lab = labels_.data() + b * crop * crop;
    for (std::size_t h = 0; h < crop; ++h) {
      for (std::size_t w = 0; w < crop; ++w) {
        lab[h * crop + w] = s.labels[(top + h) * W + left + w];
      }
    }
  }
}

void Trainer::record_trajectories() {
  for (std::size_t i = 0; i < trajectories_.size(); ++i) {
    trajectories_[i].record(model_.aggregated_filter(i), steps_done_);
  }
}

double Trainer::step() {
  sample_batch();
  ad::Tape tape;
  const ad::Var input = tape.constant(batch_);
  const ToyModel::Graph g = model_.forward(tape, input, true);
  const ad::Var loss = ad::softmax_cross_entropy(tape, g.scores, labels_);
  const double value = tape.value(loss)[0];
  if (!std::isfinite(value)) {
    throw TrainingError("training diverged: loss is not finite", steps_done_);
  }
  ad::backward(tape, loss);

  std::vector<Parameter>& params = model_.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor grad = tape.grad(g.params[i]);
    Tensor& v = velocity_[i];
    Tensor& p = params[i].value;
    for (std::size_t k = 0; k < p.size(); ++k) {
      v[k] = cfg_.momentum * v[k] + grad[k];
      p[k] -= cfg_.learning_rate * v[k];
    }
  }
  model_.refresh();
  ++steps_done_;
  if (!trajectories_.empty() && steps_done_ % cfg_.log_interval == 0) {
    record_trajectories();
  }
  return value;
}

TrainResult train(ToyModel& model, std::span<const SynthSample> data,
                  const TrainConfig& cfg) {
  Trainer trainer(model, data, cfg);
  TrainResult result;
  result.losses.reserve(static_cast<std::size_t>(cfg.steps));
  const auto start = std::chrono::steady_clock::now();
  for (std::int64_t s = 0; s < cfg.steps; ++s) result.losses.push_back(trainer.step());
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  result.sec_per_step = elapsed.count() / static_cast<double>(cfg.steps);
  result.trajectories = trainer.trajectories();
  return result;
}

}  // namespace sdconv
