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

#include "sdconv_cli/commands.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "sdconv/csv.hpp"
#include "sdconv/error.hpp"
#include "sdconv/rng.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace sdconv::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kImagesFile = "images.sdt";
constexpr const char* kLabelsFile = "labels.sdt";
constexpr const char* kMetadataFile = "metadata.jsonl";

// Creates the output directory (not its parents) and returns its absolute path.
fs::path prepare_output_dir(const fs::path& dir) {
  const fs::path abs = fs::absolute(dir).lexically_normal();
  std::error_code ec;
  if (fs::is_directory(abs, ec)) return abs;
  const fs::path parent = abs.has_filename() ? abs.parent_path()
                                             : abs.parent_path().parent_path();
  if (!fs::is_directory(parent, ec)) {
    throw IoError("parent of output directory '" + abs.string() + "' does not exist");
  }
  if (!fs::create_directory(abs, ec) && !fs::is_directory(abs)) {
    throw IoError("cannot create output directory '" + abs.string() + "': " +
                  ec.message());
  }
  return abs;
}

template <class Fn>
void write_file(const fs::path& path, Fn&& fn) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  fn(os);
  os.flush();
  if (!os) throw IoError("failed writing '" + path.string() + "'");
}

std::string mode_list(const std::vector<SmoothingMode>& modes) {
  std::string s;
  for (SmoothingMode m : modes) {
    if (!s.empty()) s += ",";
    s += to_string(m);
  }
  return s;
}

// ----------------------------------------------------------------------------
// compare helpers
// ----------------------------------------------------------------------------

struct LoadedDataset {
  CellData data;
  std::size_t total = 0;
};

LoadedDataset load_dataset_dir(const fs::path& dir, std::size_t eval_count,
                               double noise_level) {
  const Tensor images = load_tensor((dir / kImagesFile).string());
  const Tensor labels = load_tensor((dir / kLabelsFile).string());
  std::vector<SynthSample> all = unstack_dataset(images, labels, noise_level);
  if (all.size() <= eval_count) {
    throw ConfigError("experiment.eval_count: dataset in '" + dir.string() + "' has " +
                      std::to_string(all.size()) +
                      " samples, need more than eval_count for training");
  }
  LoadedDataset out;
  out.total = all.size();
  const auto split = static_cast<std::ptrdiff_t>(all.size() - eval_count);
  out.data.train.assign(all.begin(), all.begin() + split);
  out.data.eval.assign(all.begin() + split, all.end());
  return out;
}

/// Per-layer trajectories averaged over seeds, then over layers.
struct TrajectorySet {
  std::vector<AlphaTrajectory> per_layer;
  AlphaTrajectory overall;
};

std::optional<TrajectorySet> collect_trajectories(const ComparisonTable& table) {
  std::vector<std::vector<AlphaTrajectory>> by_layer;
  for (const CellResult& c : table.cells) {
    if (c.failed || c.mode != SmoothingMode::aggregated || c.trajectories.empty()) continue;
    if (by_layer.empty()) by_layer.resize(c.trajectories.size());
    for (std::size_t i = 0; i < c.trajectories.size() && i < by_layer.size(); ++i) {
      by_layer[i].push_back(c.trajectories[i]);
    }
  }
  if (by_layer.empty()) return std::nullopt;
  TrajectorySet s;
  for (const auto& runs : by_layer) s.per_layer.push_back(AlphaTrajectory::mean(runs));
  s.overall = AlphaTrajectory::mean(s.per_layer);
  return s;
}

std::string describe_trend(const AlphaTrajectory& t) {
  const auto& samples = t.samples();
  if (samples.size() < 2) return "alpha trend: fewer than two samples recorded";
  static constexpr const char* kNames[] = {"ave", "gauss", "learned", "none"};
  std::ostringstream os;
  os << "alpha trend (mean over seeds and layers, step " << samples.front().step << " -> "
     << samples.back().step << "):";
  for (std::size_t m = 0; m < 4; ++m) {
    os << " " << kNames[m] << " " << csv::format(samples.front().alpha[m]) << " -> "
       << csv::format(samples.back().alpha[m]) << ";";
  }
  const auto none = static_cast<std::size_t>(Member::none);
  const bool falls_first = samples[1].alpha[none] < samples[0].alpha[none];
  bool monotone = true;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    monotone = monotone && samples[i].alpha[none] <= samples[i - 1].alpha[none];
  }
  os << " alpha_none falls over the first interval: " << (falls_first ? "yes" : "no")
     << "; non-increasing throughout: " << (monotone ? "yes" : "no");
  return os.str();
}

void print_summary(std::ostream& out, const ComparisonTable& table) {
  out << std::left << std::setw(12) << "mode" << std::right << std::setw(6) << "runs"
      << std::setw(6) << "fail" << std::setw(12) << "mean_miou" << std::setw(12)
      << "std_miou" << std::setw(14) << "sec_per_step" << "\n";
  for (const ModeSummary& s : table.summary) {
    out << std::left << std::setw(12) << to_string(s.mode) << std::right << std::setw(6)
        << s.runs << std::setw(6) << s.failures << std::fixed << std::setprecision(4)
        << std::setw(12) << s.mean_miou << std::setw(12) << s.std_miou << std::setw(14)
        << s.mean_sec_per_step << "\n";
    out.unsetf(std::ios::floatfield);
  }
}

}  // namespace

// ----------------------------------------------------------------------------
// generate
// ----------------------------------------------------------------------------

int cmd_generate(const RunConfig& cfg, std::ostream& out) {
  const fs::path dir = prepare_output_dir(cfg.output_dir);
  Rng rng(cfg.dataset.seed);
  const std::vector<SynthSample> data = generate_dataset(cfg.dataset.data, rng);

  save_tensor((dir / kImagesFile).string(), stack_images(data));
  save_tensor((dir / kLabelsFile).string(), stack_labels(data));
  write_file(dir / kMetadataFile, [&](std::ostream& os) {
    write_dataset_metadata(os, data, cfg.dataset.data.classes);
  });

  std::vector<std::uint64_t> histogram(static_cast<std::size_t>(cfg.dataset.data.classes));
  for (const SynthSample& s : data) {
    for (int l : s.labels) ++histogram[static_cast<std::size_t>(l)];
  }
  out << "samples: " << data.size() << "\n";
  out << "class histogram (pixels):\n";
  for (std::size_t c = 0; c < histogram.size(); ++c) {
    out << "  class " << c << ": " << histogram[c] << "\n";
  }
  out << "wrote " << (dir / kImagesFile).string() << ", " << kLabelsFile << ", "
      << kMetadataFile << "\n";
  return kExitOk;
}

// ----------------------------------------------------------------------------
// compare
// ----------------------------------------------------------------------------

int cmd_compare(const RunConfig& cfg, std::ostream& out, const CancelFn& cancelled) {
  const ExperimentSection& ex = cfg.experiment;
  if (ex.modes.size() < 2) throw ConfigError("experiment.modes: need at least 2 modes");
  for (SmoothingMode m : ex.modes) {
    ModelConfig mc = cfg.model;
    mc.smoothing = m;
    try {
      mc.validate();
    } catch (const ParameterError& e) {
      throw ConfigError(std::string("model (mode ") + std::string(to_string(m)) +
                        "): " + e.what());
    }
  }

  // Resolve every path before any training starts.
  std::optional<fs::path> dataset_dir;
  if (ex.dataset) {
    dataset_dir = fs::absolute(*ex.dataset).lexically_normal();
    for (const char* f : {kImagesFile, kLabelsFile}) {
      if (!fs::is_regular_file(*dataset_dir / f)) {
        throw IoError("dataset file '" + (*dataset_dir / f).string() + "' not found");
      }
    }
  }
  const fs::path dir = prepare_output_dir(cfg.output_dir);

  std::optional<LoadedDataset> loaded;
  if (dataset_dir) {
    loaded = load_dataset_dir(*dataset_dir, ex.eval_count, cfg.dataset.data.noise_level);
  }

  struct Level {
    std::string tag;
    double noise;
  };
  std::vector<Level> levels;
  if (loaded) {
    levels.push_back({"dataset", cfg.dataset.data.noise_level});
  } else {
    for (double n : ex.noise_levels) levels.push_back({"noise" + csv::format(n), n});
  }

  bool any_failed = false;
  std::ostringstream run_summary;
  run_summary << "modes: " << mode_list(ex.modes) << "\n";
  for (const Level& level : levels) {
    ExperimentConfig ec;
    ec.modes = ex.modes;
    ec.seeds = ex.seeds;
    ec.train_data = cfg.dataset.data;
    ec.train_data.count = ex.train_count;
    ec.train_data.noise_level = level.noise;
    ec.eval_count = ex.eval_count;
    ec.model = cfg.model;
    ec.train = cfg.training;

    const fs::path csv_path = dir / ("comparison_" + level.tag + ".csv");
    const fs::path partial_path = dir / ("comparison_" + level.tag + ".incomplete.csv");
    ComparisonTable partial;
    partial.classes = cfg.model.classes;
    auto on_cell = [&](const CellResult& cell) {
      partial.cells.push_back(cell);
      write_file(partial_path, [&](std::ostream& os) { partial.write_csv(os); });
      out << "  " << level.tag << " " << to_string(cell.mode) << " seed " << cell.seed
          << ": "
          << (cell.failed ? "FAILED (" + cell.error + ")"
                          : "miou " + csv::format(cell.metrics.miou))
          << "\n";
      out.flush();
    };

    out << "[" << level.tag << "] " << ex.modes.size() << " modes x " << ex.seeds.size()
        << " seeds, " << cfg.training.steps << " steps each\n";
    const ComparisonTable table =
        compare_modes(ec, loaded ? &loaded->data : nullptr, cancelled, on_cell);

    if (cancelled && cancelled()) {
      out << "interrupted; partial results in " << partial_path.string() << "\n";
      return kExitInterrupted;
    }

    write_file(csv_path, [&](std::ostream& os) { table.write_csv(os); });
    write_file(dir / ("summary_" + level.tag + ".csv"),
               [&](std::ostream& os) { table.write_summary_csv(os); });
    std::error_code ec_rm;
    fs::remove(partial_path, ec_rm);

    print_summary(out, table);
    run_summary << "[" << level.tag << "]\n";
    print_summary(run_summary, table);

    if (auto traj = collect_trajectories(table)) {
      for (std::size_t i = 0; i < traj->per_layer.size(); ++i) {
        write_file(dir / ("alpha_" + level.tag + "_layer" + std::to_string(i) + ".csv"),
                   [&](std::ostream& os) { traj->per_layer[i].write_csv(os); });
      }
      write_file(dir / ("alpha_" + level.tag + "_mean.csv"),
                 [&](std::ostream& os) { traj->overall.write_csv(os); });
      const std::string trend = describe_trend(traj->overall);
      out << trend << "\n";
      run_summary << trend << "\n";
    }

    for (const CellResult& c : table.cells) {
      if (!c.failed) continue;
      any_failed = true;
      const std::string line = "cell failed: " + level.tag + " mode " +
                               std::string(to_string(c.mode)) + " seed " +
                               std::to_string(c.seed) + ": " + c.error;
      out << line << "\n";
      run_summary << line << "\n";
    }
  }
  write_file(dir / "run_summary.txt", [&](std::ostream& os) { os << run_summary.str(); });
  return any_failed ? kExitCellFailure : kExitOk;
}

// ----------------------------------------------------------------------------
// analyze
// ----------------------------------------------------------------------------

int cmd_analyze(const RunConfig& cfg, std::ostream& out) {
  const AnalysisSection& an = cfg.analysis;
  const fs::path dir = prepare_output_dir(cfg.output_dir);

  struct Row {
    StackSection stack;
    double score;
    std::string art;
  };
  std::vector<Row> rows;
  for (std::size_t i = 0; i < an.stacks.size(); ++i) {
    const StackSection& st = an.stacks[i];
    DependencyMap map = [&] {
      try {
        return trace_dependencies(st.stack(), an.extent);
      } catch (const ExtentTooSmallError& e) {
        throw ConfigError("analysis.stacks[" + std::to_string(i) + "]: " + e.what() +
                          " (extent must be at least " + std::to_string(e.min_extent()) +
                          ")");
      } catch (const ParameterError& e) {
        throw ConfigError("analysis.stacks[" + std::to_string(i) + "]: " + e.what());
      }
    }();
    Row row{st, gridding_score(map), {}};
    if (an.art) {
      const int ch = an.extent.height / 2, cw = an.extent.width / 2;
      if (!map.is_interior(ch, cw)) {
        throw ConfigError("analysis.extent: centre pixel of stack " + std::to_string(i) +
                          " is not interior, enlarge the extent");
      }
      row.art = export_dependency_art(map, ch, cw);
    }
    rows.push_back(std::move(row));
  }

  write_file(dir / "gridding.csv", [&](std::ostream& os) {
    csv::write_row(os, {"layer_count", "r", "K", "smoothing", "gridding_score"});
    for (const Row& r : rows) {
      csv::write_row(os, {std::to_string(r.stack.layers), std::to_string(r.stack.dilation),
                          std::to_string(r.stack.kernel_size),
                          std::string(to_string(r.stack.smoothing)),
                          csv::format(r.score)});
    }
  });
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << "stack " << i << ": layers " << rows[i].stack.layers << ", K "
        << rows[i].stack.kernel_size << ", r " << rows[i].stack.dilation << ", smoothing "
        << to_string(rows[i].stack.smoothing) << " -> gridding score "
        << csv::format(rows[i].score) << "\n";
    if (an.art) {
      write_file(dir / ("art_stack" + std::to_string(i) + ".txt"),
                 [&](std::ostream& os) { os << rows[i].art; });
    }
  }
  return kExitOk;
}

// ----------------------------------------------------------------------------
// gradcheck
// ----------------------------------------------------------------------------

int cmd_gradcheck(const RunConfig& cfg, std::ostream& out, const ScoreTransform& transform) {
  const GradcheckSection& g = cfg.gradcheck;
  const fs::path dir = prepare_output_dir(cfg.output_dir);

  struct Line {
    std::string mode;
    ad::GradReport::Entry entry;
  };
  std::vector<Line> lines;
  bool passed = true;
  for (SmoothingMode mode : g.modes) {
    ModelConfig mc = cfg.model;
    mc.channels = g.channels;
    mc.smoothing = mode;
    try {
      mc.validate();
    } catch (const ParameterError& e) {
      throw ConfigError(std::string("gradcheck (mode ") + std::string(to_string(mode)) +
                        "): " + e.what());
    }
    const Rng root(g.seed);
    Rng model_rng = root.split(1);
    ToyModel model(mc, model_rng);
    // Zero biases leave whole fields at exactly zero, which sits on the ReLU
    // kink and starves later layers. Small positive biases keep units active
    // so every gradient entry is well above the central-difference noise.
    Rng bias_rng = root.split(3);
    for (Parameter& p : model.parameters()) {
      if (p.name.ends_with(".bias")) {
        p.value = random_uniform(p.value.shape(), 0.1, 0.5, bias_rng);
      }
    }
    model.refresh();
    Rng data_rng = root.split(2);
    const auto E = static_cast<std::size_t>(g.extent);
    const Tensor input =
        random_uniform(Shape{static_cast<std::size_t>(g.batch_size),
                             static_cast<std::size_t>(mc.input_channels), E, E},
                       -1.0, 1.0, data_rng);
    std::vector<int> labels(static_cast<std::size_t>(g.batch_size) * E * E);
    for (int& l : labels) l = static_cast<int>(data_rng.below(mc.classes));

    std::vector<ad::NamedTensor> params;
    for (const Parameter& p : model.parameters()) params.push_back({p.name, p.value});
    params.push_back({"input", input});

    const ad::ScalarModel loss = [&](ad::Tape& t, const std::vector<ad::Var>& v) {
      const std::span<const ad::Var> weights(v.data(), v.size() - 1);
      ad::Var scores = model.forward(t, v.back(), weights);
      if (transform) scores = transform(t, scores);
      return ad::softmax_cross_entropy(t, scores, labels);
    };
    const ad::GradReport report = ad::check_gradients(loss, params, g.tolerance, g.step);
    passed = passed && report.passed;
    for (const auto& e : report.entries) lines.push_back({std::string(to_string(mode)), e});
  }

  write_file(dir / "gradcheck.csv", [&](std::ostream& os) {
    csv::write_row(os, {"mode", "parameter", "max_rel_error", "passed"});
    for (const Line& l : lines) {
      csv::write_row(os, {l.mode, l.entry.name, csv::format(l.entry.max_rel_error),
                          l.entry.passed ? "1" : "0"});
    }
  });
  out << "tolerance " << csv::format(g.tolerance) << "\n";
  for (const Line& l : lines) {
    out << "  " << std::left << std::setw(11) << l.mode << std::setw(18) << l.entry.name
        << std::right << " max_rel_error " << std::setw(12) << std::setprecision(4)
        << l.entry.max_rel_error << (l.entry.passed ? "  ok" : "  FAIL") << "\n";
  }
  out << std::setprecision(6);
  if (!passed) {
    out << "gradient check failed for:";
    for (const Line& l : lines) {
      if (!l.entry.passed) out << " " << l.mode << "/" << l.entry.name;
    }
    out << "\n";
    return kExitGradcheck;
  }
  out << "all gradients within tolerance\n";
  return kExitOk;
}

// ----------------------------------------------------------------------------
// bench
// ----------------------------------------------------------------------------

int cmd_bench(const RunConfig& cfg, std::ostream& out) {
  if (cfg.bench.variants.empty()) throw ConfigError("bench.variants: list is empty");
  for (const BenchVariant& v : cfg.bench.variants) {
    ModelConfig mc = cfg.model;
    mc.smoothing = v.mode;
    try {
      mc.validate();
    } catch (const ParameterError& e) {
      throw ConfigError("bench variant '" + v.name + "': " + e.what());
    }
  }
  const fs::path dir = prepare_output_dir(cfg.output_dir);
  BenchReport report;
  try {
    report = bench_variants(cfg.bench.variants, cfg.model, cfg.training, cfg.bench.options);
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("bench: ") + e.what());
  }
  write_file(dir / "bench.csv", [&](std::ostream& os) { report.write_csv(os); });
  write_file(dir / "bench_summary.txt", [&](std::ostream& os) { report.write_summary(os); });
  report.write_summary(out);
  return kExitOk;
}

// ----------------------------------------------------------------------------
// command line
// ----------------------------------------------------------------------------

void retain_heap_memory() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
        const CancelFn& cancelled) {
  CLI::App app{"Smoothed dilated convolution toolkit"};
  app.name("sdconv");
  app.require_subcommand(1);

  struct Common {
    std::string config;
    std::vector<std::string> overrides;
    std::string output_dir;
  };
  std::map<std::string, Common> common;

  auto add = [&](const std::string& name, const std::string& description) {
    CLI::App* sub = app.add_subcommand(name, description);
    Common& c = common[name];
    sub->add_option("-c,--config", c.config, "JSON run configuration (defaults if omitted)");
    sub->add_option("--set", c.overrides,
                    "Override one config key, e.g. --set training.steps=200 "
                    "(value parsed as JSON, else taken as a string)")
        ->allow_extra_args(false);
    sub->add_option("-o,--output-dir", c.output_dir, "Output directory (overrides output_dir)");
    return sub;
  };
  add("generate", "Generate the synthetic segmentation dataset (dataset section)");
  add("compare", "Train and evaluate every smoothing mode over seeds (experiment section)");
  add("analyze", "Gridding scores and dependency art for layer stacks (analysis section)");
  add("gradcheck", "Check analytic gradients against finite differences (gradcheck section)");
  add("bench", "Time training steps of each smoothing variant (bench section)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << (e.get_name() == "CallForAllHelp" ? app.help("", CLI::AppFormatMode::All)
                                               : app.help());
      return kExitOk;
    }
    err << "error: " << e.what() << "\n" << "run 'sdconv --help' for usage\n";
    return kExitConfig;
  }

  CLI::App* sub = app.get_subcommands().front();
  const Common& c = common.at(sub->get_name());
  try {
    RunConfig cfg = c.config.empty() ? parse_config("", c.overrides)
                                     : load_config(c.config, c.overrides);
    if (!c.output_dir.empty()) cfg.output_dir = c.output_dir;
    const std::string& name = sub->get_name();
    if (name == "generate") return cmd_generate(cfg, out);
    if (name == "compare") return cmd_compare(cfg, out, cancelled);
    if (name == "analyze") return cmd_analyze(cfg, out);
    if (name == "gradcheck") return cmd_gradcheck(cfg, out);
    return cmd_bench(cfg, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    err << "I/O error: " << e.what() << "\n";
    return kExitIo;
  }
}

}  // namespace sdconv::cli
