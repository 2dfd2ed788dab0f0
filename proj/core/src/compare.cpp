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

#include <algorithm>
#include <cmath>
#include <ostream>

#include "sdconv/csv.hpp"
#include "sdconv/error.hpp"
#include "sdconv/segmentation.hpp"

namespace sdconv {

namespace {

constexpr std::uint64_t kTrainDataStream = 101;
constexpr std::uint64_t kEvalDataStream = 102;
constexpr std::uint64_t kModelStream = 103;

std::string metric_field(const std::optional<double>& v) {
  return v ? csv::format(*v) : std::string();
}

}  // namespace

const ModeSummary& ComparisonTable::summary_for(SmoothingMode mode) const {
  for (const ModeSummary& s : summary) {
    if (s.mode == mode) return s;
  }
  throw ParameterError("comparison has no mode '" + std::string(to_string(mode)) + "'");
}

bool ComparisonTable::any_failed() const {
  return std::any_of(cells.begin(), cells.end(), [](const CellResult& c) { return c.failed; });
}

void ComparisonTable::write_csv(std::ostream& os) const {
  std::vector<std::string> header{"mode", "seed", "miou"};
  for (int c = 0; c < classes; ++c) header.push_back("iou_class_" + std::to_string(c));
  header.push_back("sec_per_step");
  csv::write_row(os, header);
  for (const CellResult& cell : cells) {
    std::vector<std::string> row{std::string(to_string(cell.mode)),
                                 std::to_string(cell.seed)};
    if (cell.failed) {
      row.resize(header.size());
    } else {
      row.push_back(csv::format(cell.metrics.miou));
      for (int c = 0; c < classes; ++c) {
        const auto idx = static_cast<std::size_t>(c);
        row.push_back(idx < cell.metrics.per_class_iou.size()
                          ? metric_field(cell.metrics.per_class_iou[idx])
                          : std::string());
      }
      row.push_back(csv::format(cell.sec_per_step));
    }
    csv::write_row(os, row);
  }
}

void ComparisonTable::write_summary_csv(std::ostream& os) const {
  csv::write_row(os, {"mode", "runs", "failures", "mean_miou", "std_miou",
                      "mean_sec_per_step"});
  for (const ModeSummary& s : summary) {
    csv::write_row(os, {std::string(to_string(s.mode)), std::to_string(s.runs),
                        std::to_string(s.failures), csv::format(s.mean_miou),
                        csv::format(s.std_miou), csv::format(s.mean_sec_per_step)});
  }
}

CellData make_cell_data(const ExperimentConfig& cfg, std::uint64_t seed) {
  const Rng root(seed);
  CellData d;
  Rng train_rng = root.split(kTrainDataStream);
  d.train = generate_dataset(cfg.train_data, train_rng);
  DatasetConfig eval_cfg = cfg.train_data;
  eval_cfg.count = cfg.eval_count;
  Rng eval_rng = root.split(kEvalDataStream);
  d.eval = generate_dataset(eval_cfg, eval_rng);
  return d;
}

ComparisonTable compare_modes(const ExperimentConfig& cfg, const CellData* provided,
                              const std::function<bool()>& cancelled,
                              const std::function<void(const CellResult&)>& on_cell) {
  if (cfg.modes.empty()) throw ParameterError("no modes to compare");
  if (cfg.seeds.empty()) throw ParameterError("no seeds to run");
  cfg.train.validate();

  ComparisonTable table;
  table.classes = cfg.model.classes;
  for (std::uint64_t seed : cfg.seeds) {
    std::optional<CellData> generated;
    const CellData* data = provided;
    for (SmoothingMode mode : cfg.modes) {
      if (cancelled && cancelled()) break;
      CellResult cell;
      cell.mode = mode;
      cell.seed = seed;
      try {
        if (data == nullptr) {
          generated = make_cell_data(cfg, seed);
          data = &*generated;
        }
        ModelConfig mcfg = cfg.model;
        mcfg.smoothing = mode;
        Rng model_rng = Rng(seed).split(kModelStream);
        ToyModel model(mcfg, model_rng);
        TrainConfig tcfg = cfg.train;
        tcfg.seed = seed;
        TrainResult tr = train(model, data->train, tcfg);
        cell.metrics = evaluate(model, data->eval);
        cell.sec_per_step = tr.sec_per_step;
        cell.losses = std::move(tr.losses);
        cell.trajectories = std::move(tr.trajectories);
      } catch (const Error& e) {
        cell.failed = true;
        cell.error = e.what();
      }
      if (on_cell) on_cell(cell);
      table.cells.push_back(std::move(cell));
    }
    if (cancelled && cancelled()) break;
  }

  for (SmoothingMode mode : cfg.modes) {
    ModeSummary s;
    s.mode = mode;
    std::vector<double> mious;
    double time = 0.0;
    for (const CellResult& c : table.cells) {
      if (c.mode != mode) continue;
      if (c.failed) {
        ++s.failures;
        continue;
      }
      mious.push_back(c.metrics.miou);
      time += c.sec_per_step;
    }
    s.runs = mious.size();
    if (!mious.empty()) {
      double sum = 0.0;
      for (double v : mious) sum += v;
      s.mean_miou = sum / static_cast<double>(mious.size());
      s.mean_sec_per_step = time / static_cast<double>(mious.size());
      if (mious.size() > 1) {
        double ss = 0.0;
        for (double v : mious) ss += (v - s.mean_miou) * (v - s.mean_miou);
        s.std_miou = std::sqrt(ss / static_cast<double>(mious.size() - 1));
      }
    }
    table.summary.push_back(s);
  }
  return table;
}

}  // namespace sdconv
