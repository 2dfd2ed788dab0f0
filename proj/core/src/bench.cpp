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

#include "sdconv/bench.hpp"

#include <algorithm>
#include <chrono>
#include <iomanip>
#include <ostream>

#include "sdconv/csv.hpp"
#include "sdconv/error.hpp"

namespace sdconv {

namespace {

constexpr std::uint64_t kBenchDataStream = 201;
constexpr std::uint64_t kBenchModelStream = 202;

double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

std::uint64_t smoothing_macs(SmoothingMode mode, bool separable, int s, int channels,
                             const Extent& e) {
  const auto px = static_cast<std::uint64_t>(e.height) * static_cast<std::uint64_t>(e.width);
  const auto C = static_cast<std::uint64_t>(channels);
  const auto ss = static_cast<std::uint64_t>(s);
  switch (mode) {
    case SmoothingMode::none:
      return 0;
    case SmoothingMode::average:
    case SmoothingMode::gaussian:
      return (separable ? 2 * ss : ss * ss) * C * px;
    case SmoothingMode::learned:
    case SmoothingMode::aggregated:
      return ss * ss * C * px;
  }
  return 0;
}

void finalize(BenchResult& r, int warmup) {
  r.warmup = warmup;
  r.steps_measured = static_cast<int>(r.samples_ms.size());
  r.median_ms = median(r.samples_ms);
  r.iqr_ms = interquartile_range(r.samples_ms);
}

void apply_overhead(std::vector<BenchResult>& results) {
  const auto base = std::find_if(results.begin(), results.end(),
                                 [](const BenchResult& r) { return r.variant == "none"; });
  if (base == results.end()) return;
  const double b = base->median_ms;
  for (BenchResult& r : results) {
    r.overhead_pct = &r == &*base ? 0.0 : (r.median_ms / b - 1.0) * 100.0;
  }
}

}  // namespace

std::optional<BenchVariant> parse_bench_variant(std::string_view name) {
  if (auto mode = parse_smoothing_mode(name)) {
    return BenchVariant{std::string(name), *mode, true};
  }
  const std::pair<std::string_view, BenchVariant> extra[] = {
      {"average-2d", {"average-2d", SmoothingMode::average, false}},
      {"average-separable", {"average-separable", SmoothingMode::average, true}},
      {"gaussian-2d", {"gaussian-2d", SmoothingMode::gaussian, false}},
      {"gaussian-separable", {"gaussian-separable", SmoothingMode::gaussian, true}},
  };
  for (const auto& [key, variant] : extra) {
    if (key == name) return variant;
  }
  return std::nullopt;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return quantile(v, 0.5);
}

double interquartile_range(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return quantile(v, 0.75) - quantile(v, 0.25);
}

const BenchResult& BenchReport::result(std::string_view variant) const {
  for (const BenchResult& r : results) {
    if (r.variant == variant) return r;
  }
  throw ParameterError("no bench result for '" + std::string(variant) + "'");
}

void BenchReport::write_csv(std::ostream& os) const {
  csv::write_row(os, {"variant", "median_ms", "iqr_ms", "overhead_pct", "param_count",
                      "flops_per_step"});
  for (const BenchResult& r : results) {
    csv::write_row(os, {r.variant, csv::format(r.median_ms), csv::format(r.iqr_ms),
                        csv::format(r.overhead_pct),
                        std::to_string(r.param_count), std::to_string(r.flops_per_step)});
  }
}

void BenchReport::write_summary(std::ostream& os) const {
  const auto flags = os.flags();
  os << std::left << std::setw(20) << "variant" << std::right << std::setw(12)
     << "median_ms" << std::setw(10) << "iqr_ms" << std::setw(12) << "overhead%"
     << std::setw(10) << "params" << std::setw(16) << "flops/step" << '\n';
  os << std::fixed;
  for (const BenchResult& r : results) {
    os << std::left << std::setw(20) << r.variant << std::right << std::setprecision(3)
       << std::setw(12) << r.median_ms << std::setw(10) << r.iqr_ms
       << std::setprecision(1) << std::setw(12) << r.overhead_pct << std::setw(10)
       << r.param_count << std::setw(16) << r.flops_per_step << '\n';
  }
  for (std::size_t rep = 0; rep < per_rep.size(); ++rep) {
    std::vector<BenchResult> sorted = per_rep[rep];
    std::sort(sorted.begin(), sorted.end(), [](const BenchResult& a, const BenchResult& b) {
      return a.median_ms < b.median_ms;
    });
    os << "rep " << rep << " ordering:";
    for (const BenchResult& r : sorted) os << ' ' << r.variant;
    os << '\n';
  }
  os << "ordering stable across reps: " << (ordering_stable ? "yes" : "no") << '\n';
  os.flags(flags);
}

BenchReport bench_variants(const std::vector<BenchVariant>& variants,
                           const ModelConfig& model, const TrainConfig& train,
                           const BenchOptions& options) {
  if (variants.empty()) throw ParameterError("no bench variants given");
  if (std::none_of(variants.begin(), variants.end(),
                   [](const BenchVariant& v) { return v.mode == SmoothingMode::none; })) {
    throw ParameterError("bench variants must include the 'none' baseline");
  }
  if (options.reps < 1) throw ParameterError("reps must be >= 1");
  if (options.steps < 30) throw ParameterError("need at least 30 measured steps");
  if (options.warmup < 0) throw ParameterError("warmup must be >= 0");
  train.validate();

  DatasetConfig dcfg;
  dcfg.count = options.dataset_size;
  dcfg.extent = {train.crop_size, train.crop_size};
  dcfg.classes = model.classes;
  dcfg.channels = model.input_channels;
  Rng data_rng = Rng(train.seed).split(kBenchDataStream);
  const std::vector<SynthSample> data = generate_dataset(dcfg, data_rng);

  BenchReport report;
  std::vector<BenchResult> pooled(variants.size());
  for (int rep = 0; rep < options.reps; ++rep) {
    // Every variant gets its own model and trainer. Steps are interleaved
    // round-robin so slow drift in machine speed is shared by all variants
    // rather than landing on whichever one happens to run at the time.
    std::vector<ToyModel> models;
    std::vector<Trainer> trainers;
    std::vector<BenchResult> this_rep(variants.size());
    models.reserve(variants.size());
    trainers.reserve(variants.size());
    for (std::size_t vi = 0; vi < variants.size(); ++vi) {
      const BenchVariant& v = variants[vi];
      ModelConfig mcfg = model;
      mcfg.smoothing = v.mode;
      mcfg.separable = v.separable;
      Rng model_rng = Rng(train.seed).split(kBenchModelStream);
      models.emplace_back(mcfg, model_rng);
      this_rep[vi].variant = v.name;
      this_rep[vi].param_count = models.back().parameter_count();
      this_rep[vi].flops_per_step =
          train_step_flops(v.mode, v.separable, mcfg, dcfg.extent, train.batch_size);
    }
    for (ToyModel& m : models) trainers.emplace_back(m, data, train);
    for (int i = 0; i < options.warmup; ++i) {
      for (Trainer& t : trainers) t.step();
    }
    for (int i = 0; i < options.steps; ++i) {
      for (std::size_t vi = 0; vi < trainers.size(); ++vi) {
        const auto t0 = std::chrono::steady_clock::now();
        trainers[vi].step();
        const std::chrono::duration<double, std::milli> dt =
            std::chrono::steady_clock::now() - t0;
        this_rep[vi].samples_ms.push_back(dt.count());
      }
    }
    for (std::size_t vi = 0; vi < this_rep.size(); ++vi) {
      BenchResult& r = this_rep[vi];
      finalize(r, options.warmup);
      BenchResult& acc = pooled[vi];
      acc.variant = r.variant;
      acc.param_count = r.param_count;
      acc.flops_per_step = r.flops_per_step;
      acc.samples_ms.insert(acc.samples_ms.end(), r.samples_ms.begin(), r.samples_ms.end());
    }
    apply_overhead(this_rep);
    report.per_rep.push_back(std::move(this_rep));
  }
  for (BenchResult& r : pooled) finalize(r, options.warmup);
  apply_overhead(pooled);

  // Pairwise relations that are clear in the pooled medians must hold per rep.
  for (std::size_t a = 0; a < pooled.size(); ++a) {
    for (std::size_t b = 0; b < pooled.size(); ++b) {
      const double ma = pooled[a].median_ms;
      const double mb = pooled[b].median_ms;
      if (!(ma < mb) || (mb - ma) <= kOrderingTieBand * mb) continue;
      for (const auto& rep : report.per_rep) {
        if (!(rep[a].median_ms < rep[b].median_ms)) report.ordering_stable = false;
      }
    }
  }

  std::sort(pooled.begin(), pooled.end(), [](const BenchResult& x, const BenchResult& y) {
    return x.median_ms < y.median_ms;
  });
  report.results = std::move(pooled);
  return report;
}

std::uint64_t conv_macs(int kernel_size, int in_channels, int out_channels,
                        const Extent& extent) {
  return static_cast<std::uint64_t>(kernel_size) * static_cast<std::uint64_t>(kernel_size) *
         static_cast<std::uint64_t>(in_channels) * static_cast<std::uint64_t>(out_channels) *
         static_cast<std::uint64_t>(extent.height) * static_cast<std::uint64_t>(extent.width);
}

std::uint64_t flop_estimate(SmoothingMode mode, bool separable, const ModelConfig& model,
                            const Extent& extent) {
  std::uint64_t total = conv_macs(3, model.input_channels, model.channels, extent);
  for (int r : model.dilations) {
    total += smoothing_macs(mode, separable, r, model.channels, extent);
    total += conv_macs(model.kernel_size, model.channels, model.channels, extent);
  }
  total += conv_macs(1, model.channels, model.classes, extent);
  return total;
}

std::uint64_t train_step_flops(SmoothingMode mode, bool separable,
                               const ModelConfig& model, const Extent& extent,
                               int batch_size) {
  std::uint64_t convs = conv_macs(3, model.input_channels, model.channels, extent) +
                        conv_macs(1, model.channels, model.classes, extent);
  std::uint64_t smooth = 0;
  for (int r : model.dilations) {
    convs += conv_macs(model.kernel_size, model.channels, model.channels, extent);
    const std::uint64_t s = smoothing_macs(mode, separable, r, model.channels, extent);
    const bool trainable =
        mode == SmoothingMode::learned || mode == SmoothingMode::aggregated;
    smooth += s * (trainable ? 3 : 2);
  }
  return (3 * convs + smooth) * static_cast<std::uint64_t>(batch_size);
}

std::size_t parameter_census(const ModelConfig& model) {
  model.validate();
  const auto C = static_cast<std::size_t>(model.channels);
  const auto K = static_cast<std::size_t>(model.kernel_size);
  std::size_t n = C * static_cast<std::size_t>(model.input_channels) * 9 + C;
  for (int r : model.dilations) {
    n += C * C * K * K + C;
    const auto s = static_cast<std::size_t>(r);
    if (model.smoothing == SmoothingMode::learned) n += s * s;
    if (model.smoothing == SmoothingMode::aggregated) n += s * s + 4;
  }
  n += static_cast<std::size_t>(model.classes) * C + static_cast<std::size_t>(model.classes);
  return n;
}

}  // namespace sdconv
