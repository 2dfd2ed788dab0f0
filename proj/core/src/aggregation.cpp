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

#include "sdconv/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "sdconv/csv.hpp"
#include "sdconv/error.hpp"
#include "sdconv/rng.hpp"

namespace sdconv {

Alphas softmax(const std::array<double, 4>& logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  Alphas a{};
  double z = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    a[i] = std::exp(logits[i] - m);
    z += a[i];
  }
  for (double& v : a) v /= z;
  return a;
}

AggregatedFilter::AggregatedFilter(int r, double sigma, Rng& rng)
    : size_(r),
      sigma_(sigma),
      members_{build_smoothing_filter(FilterKind::average, r),
               build_smoothing_filter(FilterKind::gaussian, r, sigma),
               build_smoothing_filter(FilterKind::learned, r, std::nullopt, &rng),
               build_smoothing_filter(FilterKind::none, r)} {}

const SmoothingFilter& AggregatedFilter::member(Member m) const {
  return members_[static_cast<std::size_t>(m)];
}

void AggregatedFilter::set_learned_weights(Tensor w) {
  if (w.shape() != members_[2].weights.shape()) {
    throw ParameterError("learned member weights must have shape " +
                         members_[2].weights.shape().str());
  }
  members_[2].weights = std::move(w);
}

Tensor AggregatedFilter::logits_tensor() const {
  return Tensor(Shape{1, 1, 1, 4}, {logits_[0], logits_[1], logits_[2], logits_[3]});
}

void AggregatedFilter::set_logits(const Tensor& logits) {
  if (logits.size() != 4) throw ParameterError("aggregation needs exactly 4 logits");
  for (std::size_t i = 0; i < 4; ++i) logits_[i] = logits[i];
}

SmoothingFilter AggregatedFilter::realize() const {
  const Alphas a = alphas();
  Tensor k(members_[0].weights.shape());
  for (std::size_t i = 0; i < k.size(); ++i) {
    k[i] = a[0] * members_[0].weights[i] + a[1] * members_[1].weights[i] +
           a[2] * members_[2].weights[i] + a[3] * members_[3].weights[i];
  }
  SmoothingFilter f = filter_from_kernel(FilterKind::aggregated, std::move(k));
  f.sigma = sigma_;
  return f;
}

ad::Var AggregatedFilter::realize(ad::Tape& tape, ad::Var logits,
                                  ad::Var learned) const {
  return ad::aggregate_kernel(tape, logits, learned, members_[0].weights,
                              members_[1].weights, members_[3].weights);
}

void AlphaTrajectory::record(const AggregatedFilter& filter, std::int64_t step) {
  record(filter.alphas(), step);
}

void AlphaTrajectory::record(const Alphas& alpha, std::int64_t step) {
  if (step < 0) throw ParameterError("trajectory step must be non-negative");
  if (!samples_.empty() && step <= samples_.back().step) {
    throw ParameterError("trajectory steps must be strictly increasing (got " +
                         std::to_string(step) + " after " +
                         std::to_string(samples_.back().step) + ")");
  }
  samples_.push_back({step, alpha});
}

void AlphaTrajectory::write_csv(std::ostream& os) const {
  os << "step,alpha_ave,alpha_gauss,alpha_learned,alpha_none\n";
  for (const AlphaSample& s : samples_) {
    csv::write_row(os, {csv::format(static_cast<long long>(s.step)),
                        csv::format(s.alpha[0]), csv::format(s.alpha[1]),
                        csv::format(s.alpha[2]), csv::format(s.alpha[3])});
  }
}

AlphaTrajectory AlphaTrajectory::mean(const std::vector<AlphaTrajectory>& trajectories) {
  AlphaTrajectory out;
  if (trajectories.empty()) return out;
  const std::size_t len = trajectories.front().size();
  for (const AlphaTrajectory& t : trajectories) {
    if (t.size() != len) throw ParameterError("trajectories differ in length");
  }
  for (std::size_t i = 0; i < len; ++i) {
    Alphas acc{};
    const std::int64_t step = trajectories.front().samples_[i].step;
    for (const AlphaTrajectory& t : trajectories) {
      if (t.samples_[i].step != step) {
        throw ParameterError("trajectories sampled at different steps");
      }
      for (std::size_t k = 0; k < 4; ++k) acc[k] += t.samples_[i].alpha[k];
    }
    for (double& v : acc) v /= static_cast<double>(trajectories.size());
    out.samples_.push_back({step, acc});
  }
  return out;
}

AlphaTrajectory& record_alphas(const AggregatedFilter& filter, std::int64_t step,
                               AlphaTrajectory& traj) {
  traj.record(filter, step);
  return traj;
}

}  // namespace sdconv
