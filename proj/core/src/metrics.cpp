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

#include "sdconv/error.hpp"
#include "sdconv/segmentation.hpp"

namespace sdconv {

IouAccumulator::IouAccumulator(int classes)
    : classes_(classes),
      intersection_(static_cast<std::size_t>(classes), 0),
      union_(static_cast<std::size_t>(classes), 0) {
  if (classes < 1) throw ParameterError("need at least one class");
}

void IouAccumulator::add(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) {
    throw ParameterError("prediction and label counts differ");
  }
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const int p = predicted[i];
    const int t = truth[i];
    if (p < 0 || p >= classes_ || t < 0 || t >= classes_) {
      throw ParameterError("class id out of range");
    }
    if (p == t) {
      ++intersection_[static_cast<std::size_t>(p)];
      ++union_[static_cast<std::size_t>(p)];
    } else {
      ++union_[static_cast<std::size_t>(p)];
      ++union_[static_cast<std::size_t>(t)];
    }
  }
}

Metrics IouAccumulator::metrics() const {
  Metrics m;
  double sum = 0.0;
  std::size_t defined = 0;
  for (std::size_t c = 0; c < union_.size(); ++c) {
    if (union_[c] == 0) {
      m.per_class_iou.push_back(std::nullopt);
      continue;
    }
    const double iou =
        static_cast<double>(intersection_[c]) / static_cast<double>(union_[c]);
    m.per_class_iou.push_back(iou);
    sum += iou;
    ++defined;
  }
  m.miou = defined == 0 ? 0.0 : sum / static_cast<double>(defined);
  return m;
}

Metrics compute_metrics(std::span<const int> predicted, std::span<const int> truth,
                        int classes) {
  IouAccumulator acc(classes);
  acc.add(predicted, truth);
  return acc.metrics();
}

std::vector<int> argmax_labels(const Tensor& scores) {
  const Shape& s = scores.shape();
  std::vector<int> out(s.n * s.plane(), 0);
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t i = 0; i < s.plane(); ++i) {
      int best = 0;
      double best_v = scores.plane(n, 0)[i];
      for (std::size_t c = 1; c < s.c; ++c) {
        const double v = scores.plane(n, c)[i];
        if (v > best_v) {
          best_v = v;
          best = static_cast<int>(c);
        }
      }
      out[n * s.plane() + i] = best;
    }
  }
  return out;
}

Metrics evaluate(const ToyModel& model, std::span<const SynthSample> data) {
  if (data.empty()) throw ParameterError("evaluation set is empty");
  IouAccumulator acc(model.config().classes);
  constexpr std::size_t kChunk = 8;
  for (std::size_t start = 0; start < data.size(); start += kChunk) {
    const std::size_t count = std::min(kChunk, data.size() - start);
    const auto chunk = data.subspan(start, count);
    const Tensor scores = model.forward(stack_images(chunk));
    const std::vector<int> pred = argmax_labels(scores);
    std::vector<int> truth;
    truth.reserve(pred.size());
    for (const SynthSample& s : chunk) truth.insert(truth.end(), s.labels.begin(), s.labels.end());
    acc.add(pred, truth);
  }
  return acc.metrics();
}

}  // namespace sdconv
