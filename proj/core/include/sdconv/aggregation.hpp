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

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "sdconv/autodiff.hpp"
#include "sdconv/conv.hpp"

namespace sdconv {

class Rng;

/// Members of the convex combination, in logit order.
enum class Member : std::size_t { average = 0, gaussian = 1, learned = 2, none = 3 };

using Alphas = std::array<double, 4>;

Alphas softmax(const std::array<double, 4>& logits);

/// Convex combination of the average, gaussian, learned and identity filters
/// with coefficients softmax(logits). The coefficients therefore stay on the
/// open simplex no matter how the logits are updated.
class AggregatedFilter {
 public:
  /// Equal logits; the learned member is drawn from `rng` like a standalone
  /// learned filter. r must be odd.
  AggregatedFilter(int r, double sigma, Rng& rng);

  int size() const { return size_; }
  double sigma() const { return sigma_; }

  Alphas alphas() const { return softmax(logits_); }
  const std::array<double, 4>& logits() const { return logits_; }
  void set_logits(const std::array<double, 4>& logits) { logits_ = logits; }

  const SmoothingFilter& member(Member m) const;
  const Tensor& learned_weights() const { return members_[2].weights; }
  void set_learned_weights(Tensor w);

  /// Logits as a (1,1,1,4) tensor, for recording on a tape.
  Tensor logits_tensor() const;
  void set_logits(const Tensor& logits);

  /// Realized kernel, kind = aggregated.
  SmoothingFilter realize() const;
  /// Same kernel on a tape, differentiable in both logits and learned weights.
  ad::Var realize(ad::Tape& tape, ad::Var logits, ad::Var learned) const;

 private:
  int size_;
  double sigma_;
  std::array<double, 4> logits_{};
  std::array<SmoothingFilter, 4> members_;
};

struct AlphaSample {
  std::int64_t step = 0;
  Alphas alpha{};
};

/// Ordered coefficient history of one aggregated filter.
class AlphaTrajectory {
 public:
  /// Appends the current coefficients. Steps must be non-negative and strictly
  /// increasing; throws ParameterError otherwise.
  void record(const AggregatedFilter& filter, std::int64_t step);
  void record(const Alphas& alpha, std::int64_t step);

  const std::vector<AlphaSample>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }

  /// CSV with header step,alpha_ave,alpha_gauss,alpha_learned,alpha_none.
  void write_csv(std::ostream& os) const;

  /// Per-step mean over several trajectories sampled at identical steps.
  static AlphaTrajectory mean(const std::vector<AlphaTrajectory>& trajectories);

 private:
  std::vector<AlphaSample> samples_;
};

AlphaTrajectory& record_alphas(const AggregatedFilter& filter, std::int64_t step,
                               AlphaTrajectory& traj);

}  // namespace sdconv
