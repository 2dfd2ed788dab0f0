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

// Acceptance runner. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails. Pass criterion numbers as arguments to
// run a subset, and --work-dir DIR to choose where command outputs go.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sdconv/aggregation.hpp"
#include "sdconv/autodiff.hpp"
#include "sdconv/bench.hpp"
#include "sdconv/conv.hpp"
#include "sdconv/gridding.hpp"
#include "sdconv/rng.hpp"
#include "sdconv/segmentation.hpp"
#include "sdconv_cli/commands.hpp"
#include "sdconv_cli/config.hpp"

using namespace sdconv;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

fs::path g_work;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  for (std::string l; std::getline(in, l);) rows.push_back(split(l));
  return rows;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t pick(Rng& r, std::size_t lo, std::size_t hi) { return lo + r.below(hi - lo + 1); }

// ---------------------------------------------------------------------------

Verdict equivalence() {
  Rng r(1001);
  int exact = 0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t K = 1 + 2 * r.below(4);
    const Tensor x = random_uniform(
        {pick(r, 1, 2), pick(r, 1, 4), pick(r, 1, 16), pick(r, 1, 16)}, -1, 1, r);
    const ConvWeights w(random_uniform({pick(r, 1, 4), x.shape().c, K, K}, -1, 1, r));
    if (dilated_conv2d(x, w, ConvSpec{static_cast<int>(K), 1}) ==
        oracle::dense_conv(x, w.kernel, 1))
      ++exact;
  }

  int fused_ok = 0;
  double fused_worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const int K = 1 + 2 * static_cast<int>(r.below(3));
    const int dil = 1 + 2 * static_cast<int>(r.below(3));
    const Tensor x = random_uniform(
        {pick(r, 1, 2), pick(r, 1, 3), pick(r, 4, 20), pick(r, 4, 20)}, -1, 1, r);
    const ConvWeights w(random_uniform({pick(r, 1, 3), x.shape().c, static_cast<std::size_t>(K),
                                        static_cast<std::size_t>(K)},
                                       -1, 1, r));
    const auto s = static_cast<std::size_t>(dil);
    const SmoothingFilter v =
        filter_from_kernel(FilterKind::learned, random_uniform({1, 1, s, s}, -1, 1, r));
    const ConvSpec spec{K, dil};
    const Tensor two_stage = oracle::dense_conv(oracle::depthwise(x, v.weights), w.kernel, dil);
    const double d = max_abs_diff(smoothed_dilated_conv2d_fused(x, v, w, spec), two_stage);
    fused_worst = std::max(fused_worst, d);
    if (d < 1e-10) ++fused_ok;
  }

  int sep_ok = 0;
  double sep_worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const int rr = 3 + 2 * (i % 3);
    const FilterKind kind = (i / 3) % 2 == 0 ? FilterKind::average : FilterKind::gaussian;
    const SmoothingFilter f =
        build_smoothing_filter(kind, rr, kind == FilterKind::gaussian
                                             ? std::optional<double>(r.uniform(0.5, 2.0))
                                             : std::nullopt);
    const Tensor x = random_uniform(
        {pick(r, 1, 2), pick(r, 1, 3), pick(r, 4, 24), pick(r, 4, 24)}, -1, 1, r);
    const double d = max_abs_diff(smooth_separable(x, f), oracle::depthwise(x, f.weights));
    sep_worst = std::max(sep_worst, d);
    if (d < 1e-12) ++sep_ok;
  }
  return {exact == 100 && fused_ok == 50 && sep_ok == 50,
          "r=1 exact " + std::to_string(exact) + "/100; fused " + std::to_string(fused_ok) +
              "/50 (worst " + fmt(fused_worst) + "); separable " + std::to_string(sep_ok) +
              "/50 (worst " + fmt(sep_worst) + ")"};
}

// ---------------------------------------------------------------------------

struct GradCase {
  std::string name;
  std::function<std::pair<ad::ScalarModel, std::vector<ad::NamedTensor>>(Rng&)> make;
};

Verdict gradients() {
  auto shapes = [](Rng& r, std::size_t& C, std::size_t& K, int& dil) {
    C = pick(r, 1, 3);
    K = 1 + 2 * r.below(3);
    dil = 1 + static_cast<int>(r.below(3));
  };
  const std::vector<GradCase> cases{
      {"conv weights",
       [&](Rng& r) {
         std::size_t C, K;
         int dil;
         shapes(r, C, K, dil);
         const Tensor x = random_uniform({pick(r, 1, 2), C, pick(r, 5, 9), pick(r, 5, 9)}, -1, 1, r);
         const Tensor probe = random_uniform({x.shape().n, 2, x.shape().h, x.shape().w}, -1, 1, r);
         const ConvSpec spec{static_cast<int>(K), dil};
         ad::ScalarModel m = [=](ad::Tape& t, const std::vector<ad::Var>& p) {
           const ad::Var y = ad::dilated_conv2d(t, t.constant(x), p[0], spec);
           return ad::add(t, ad::sum_squares(t, y), ad::sum(t, ad::mul(t, y, t.constant(probe))));
         };
         return std::make_pair(m, std::vector<ad::NamedTensor>{
                                      {"w", random_uniform({2, C, K, K}, -1, 1, r)}});
       }},
      {"input",
       [&](Rng& r) {
         std::size_t C, K;
         int dil;
         shapes(r, C, K, dil);
         const Tensor w = random_uniform({2, C, K, K}, -1, 1, r);
         const Tensor x = random_uniform({pick(r, 1, 2), C, pick(r, 5, 9), pick(r, 5, 9)}, -1, 1, r);
         const Tensor probe = random_uniform({x.shape().n, 2, x.shape().h, x.shape().w}, -1, 1, r);
         const ConvSpec spec{static_cast<int>(K), dil};
         ad::ScalarModel m = [=](ad::Tape& t, const std::vector<ad::Var>& p) {
           const ad::Var y = ad::dilated_conv2d(t, p[0], t.constant(w), spec);
           return ad::add(t, ad::sum_squares(t, y), ad::sum(t, ad::mul(t, y, t.constant(probe))));
         };
         return std::make_pair(m, std::vector<ad::NamedTensor>{{"x", x}});
       }},
      {"learned filter",
       [&](Rng& r) {
         const std::size_t C = pick(r, 1, 3);
         const int dil = 1 + 2 * static_cast<int>(r.below(3));
         const auto s = static_cast<std::size_t>(dil);
         const Tensor x = random_uniform({1, C, pick(r, 6, 10), pick(r, 6, 10)}, -1, 1, r);
         const Tensor w = random_uniform({2, C, 3, 3}, -1, 1, r);
         ad::ScalarModel m = [=](ad::Tape& t, const std::vector<ad::Var>& p) {
           const ad::Var sm = ad::smooth(t, t.constant(x), p[0]);
           return ad::sum_squares(t, ad::dilated_conv2d(t, sm, t.constant(w), ConvSpec{3, dil}));
         };
         return std::make_pair(m, std::vector<ad::NamedTensor>{
                                      {"v", random_uniform({1, 1, s, s}, -1, 1, r)}});
       }},
      {"aggregation logits",
       [&](Rng& r) {
         const std::size_t C = pick(r, 1, 3);
         const int s = 3 + 2 * static_cast<int>(r.below(2));
         const auto ss = static_cast<std::size_t>(s);
         const Tensor x = random_uniform({1, C, pick(r, 6, 10), pick(r, 6, 10)}, -1, 1, r);
         const Tensor w = random_uniform({2, C, 3, 3}, -1, 1, r);
         const Tensor learned = random_uniform({1, 1, ss, ss}, -1, 1, r);
         const Tensor avg = build_smoothing_filter(FilterKind::average, s).weights;
         const Tensor gau = build_smoothing_filter(FilterKind::gaussian, s, 1.0).weights;
         const Tensor del = build_smoothing_filter(FilterKind::none, s).weights;
         ad::ScalarModel m = [=](ad::Tape& t, const std::vector<ad::Var>& p) {
           const ad::Var k = ad::aggregate_kernel(t, p[0], t.constant(learned), avg, gau, del);
           const ad::Var sm = ad::smooth(t, t.constant(x), k);
           return ad::sum_squares(t, ad::dilated_conv2d(t, sm, t.constant(w), ConvSpec{3, s}));
         };
         Tensor logits({1, 1, 1, 4});
         for (double& v : logits.data()) v = r.normal();
         return std::make_pair(m, std::vector<ad::NamedTensor>{{"logits", logits}});
       }},
  };

  Rng r(2002);
  bool all = true;
  std::string detail;
  for (const GradCase& c : cases) {
    int passed = 0;
    double worst = 0.0;
    constexpr int kInstances = 25;
    for (int i = 0; i < kInstances; ++i) {
      auto [model, params] = c.make(r);
      const ad::GradReport rep = ad::check_gradients(model, params, 1e-4, 1e-5);
      for (const auto& e : rep.entries) worst = std::max(worst, e.max_rel_error);
      if (rep.passed) ++passed;
    }
    all = all && passed == kInstances;
    if (!detail.empty()) detail += "; ";
    detail += c.name + " " + std::to_string(passed) + "/" + std::to_string(kInstances) +
              " (worst " + fmt(worst) + ")";
  }
  return {all, detail};
}

// ---------------------------------------------------------------------------

// Every layer choice with per-layer span <= 15; K=1 layers ignore the rate.
std::vector<StackLayer> layer_options() {
  std::vector<StackLayer> out;
  for (int K : {1, 3, 5, 7})
    for (int dil = 1; dil <= 7; ++dil) {
      if (K == 1 && dil > 1) continue;
      for (int s = 1; s <= 5; ++s) {
        if ((K - 1) * dil + s > 15) continue;
        out.push_back(StackLayer{ConvSpec{K, dil}, s == 1 ? FilterKind::none : FilterKind::average,
                                 s});
      }
    }
  return out;
}

bool oracle_agrees(const LayerStack& st) {
  const Extent e{st.span() + 2, st.span() + 3};
  const DependencyMap m = trace_dependencies(st, e);
  const auto truth = oracle::impulse_dependencies(st, e);
  for (int h = 0; h < e.height; ++h)
    for (int w = 0; w < e.width; ++w) {
      std::set<int> got;
      for (const auto& [ih, iw] : m.dependencies(h, w)) got.insert(ih * e.width + iw);
      if (got != truth[static_cast<std::size_t>(h * e.width + w)]) return false;
    }
  return true;
}

Verdict gridding() {
  const StackLayer plain{ConvSpec{3, 2}, FilterKind::none, 1};
  const StackLayer smooth{ConvSpec{3, 2}, FilterKind::average, 2};
  const double s_plain = gridding_score(trace_dependencies(LayerStack{{plain, plain}}, {32, 32}));
  const double s_smooth =
      gridding_score(trace_dependencies(LayerStack{{smooth, smooth}}, {32, 32}));

  // One- and two-layer stacks exhaustively, three-layer stacks of 3x3 kernels.
  const auto opts = layer_options();
  std::size_t stacks = 0, agree = 0;
  auto visit = [&](const LayerStack& st) {
    if (st.span() > 15) return;
    ++stacks;
    if (oracle_agrees(st)) ++agree;
  };
  for (const StackLayer& a : opts) {
    visit(LayerStack{{a}});
    for (const StackLayer& b : opts) {
      visit(LayerStack{{a, b}});
      if (a.conv.kernel_size != 3 || b.conv.kernel_size != 3) continue;
      for (const StackLayer& c : opts)
        if (c.conv.kernel_size == 3) visit(LayerStack{{a, b, c}});
    }
  }
  return {s_plain == 1.0 && s_smooth == 0.0 && agree == stacks,
          "K=3 r=2 two layers: " + fmt(s_plain) + ", with average s=2: " + fmt(s_smooth) +
              "; oracle agreement " + std::to_string(agree) + "/" + std::to_string(stacks) +
              " stacks"};
}

// ---------------------------------------------------------------------------

Verdict simplex() {
  Rng r(4004);
  AggregatedFilter agg(5, 1.0, r);
  const Tensor target = random_uniform({1, 1, 5, 5}, -0.5, 1.0, r);
  double worst_sum = 0.0, min_alpha = 1.0, worst_hull = 0.0;
  for (int step = 0; step < 1000; ++step) {
    ad::Tape t;
    const ad::Var lg = t.parameter(agg.logits_tensor(), "logits");
    const ad::Var k = agg.realize(t, lg, t.constant(agg.learned_weights()));
    const auto g = ad::backward(t, ad::sum_squares(t, ad::sub(t, k, t.constant(target))));
    // Large, noisy steps so the logits wander far from the origin.
    Tensor l = agg.logits_tensor();
    const double lr = r.uniform(0.5, 50.0);
    for (std::size_t i = 0; i < 4; ++i) l.data()[i] -= lr * g.at("logits").data()[i] + r.normal();
    agg.set_logits(l);

    const Alphas a = agg.alphas();
    worst_sum = std::max(worst_sum, std::abs(a[0] + a[1] + a[2] + a[3] - 1.0));
    for (double v : a) min_alpha = std::min(min_alpha, v);
    const Tensor kv = agg.realize().weights;
    for (std::size_t i = 0; i < kv.size(); ++i) {
      double lo = 1e300, hi = -1e300;
      for (Member m : {Member::average, Member::gaussian, Member::learned, Member::none}) {
        lo = std::min(lo, agg.member(m).weights.data()[i]);
        hi = std::max(hi, agg.member(m).weights.data()[i]);
      }
      worst_hull = std::max({worst_hull, lo - kv.data()[i], kv.data()[i] - hi});
    }
  }
  return {worst_sum <= 1e-9 && min_alpha > 0.0 && worst_hull <= 1e-12,
          "max |sum-1| " + fmt(worst_sum) + ", min alpha " + fmt(min_alpha) +
              ", max hull excursion " + fmt(std::max(worst_hull, 0.0))};
}

// ---------------------------------------------------------------------------

Verdict quality() {
  cli::RunConfig cfg = cli::default_config();
  cfg.output_dir = (g_work / "quality").string();
  fs::remove_all(cfg.output_dir);
  std::ostringstream log;
  const auto t0 = std::chrono::steady_clock::now();
  const int code = cli::cmd_compare(cfg, log);
  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
  if (code != cli::kExitOk) return {false, "compare exited with " + std::to_string(code)};

  std::map<std::string, std::pair<double, double>> stats;  // mean, sd
  std::map<std::string, double> runs;
  const auto rows = read_csv(fs::path(cfg.output_dir) / "summary_noise0.5.csv");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    stats[rows[i][0]] = {std::stod(rows[i][3]), std::stod(rows[i][4])};
    runs[rows[i][0]] = std::stod(rows[i][1]);
  }
  // Pooled over the four modes, equal run counts.
  double pooled_var = 0.0;
  for (const auto& [mode, s] : stats) pooled_var += s.second * s.second;
  const double pooled = std::sqrt(pooled_var / static_cast<double>(stats.size()));
  const double none = stats.at("none").first;
  bool within = true, above = false;
  std::string detail = "none " + fmt(none);
  for (const char* m : {"average", "gaussian", "learned"}) {
    const double mean = stats.at(m).first;
    within = within && mean >= none - pooled;
    above = above || mean > none;
    detail += ", " + std::string(m) + " " + fmt(mean);
  }
  detail += "; pooled sd " + fmt(pooled) + "; " + fmt(minutes) + " min";
  return {within && above, detail};
}

// ---------------------------------------------------------------------------

Verdict overhead() {
  const cli::RunConfig cfg = cli::default_config();
  BenchOptions o = cfg.bench.options;
  o.reps = std::max(o.reps, 3);
  const std::vector<BenchVariant> vs{*parse_bench_variant("none"), *parse_bench_variant("average"),
                                     *parse_bench_variant("gaussian"),
                                     *parse_bench_variant("learned")};
  const BenchReport rep = bench_variants(vs, cfg.model, cfg.training, o);

  int stable = 0;
  for (const auto& r : rep.per_rep) {
    std::map<std::string, double> med;
    for (const BenchResult& b : r) med[b.variant] = b.median_ms;
    if (med["none"] <= med["average"] && med["none"] <= med["gaussian"] &&
        med["learned"] > med["average"] && med["learned"] > med["gaussian"])
      ++stable;
  }

  ModelConfig m = cfg.model;
  m.smoothing = SmoothingMode::none;
  const std::size_t base = parameter_census(m);
  std::size_t learned_extra = 0;
  for (int r : m.dilations) learned_extra += static_cast<std::size_t>(r * r);
  m.smoothing = SmoothingMode::average;
  const bool avg0 = parameter_census(m) == base;
  m.smoothing = SmoothingMode::gaussian;
  const bool gau0 = parameter_census(m) == base;
  m.smoothing = SmoothingMode::learned;
  const bool learned_s2 = parameter_census(m) == base + learned_extra;

  std::string detail = "ordering held in " + std::to_string(stable) + "/" +
                       std::to_string(rep.per_rep.size()) + " reps; medians ms";
  for (const char* v : {"none", "average", "gaussian", "learned"})
    detail += " " + std::string(v) + "=" + fmt(rep.result(v).median_ms);
  detail += "; census +0/+0/+" + std::to_string(learned_extra) +
            (avg0 && gau0 && learned_s2 ? " as expected" : " MISMATCH");
  return {stable == static_cast<int>(rep.per_rep.size()) && avg0 && gau0 && learned_s2, detail};
}

// ---------------------------------------------------------------------------

Verdict trajectory() {
  cli::RunConfig cfg = cli::default_config();
  cfg.output_dir = (g_work / "trajectory").string();
  fs::remove_all(cfg.output_dir);
  cfg.experiment.modes = {SmoothingMode::none, SmoothingMode::aggregated};
  cfg.experiment.seeds = {1};
  cfg.training.steps = 500;
  cfg.training.log_interval = 50;
  std::ostringstream log;
  const int code = cli::cmd_compare(cfg, log);
  if (code != cli::kExitOk) return {false, "compare exited with " + std::to_string(code)};

  const fs::path dir(cfg.output_dir);
  const std::size_t layers = cfg.model.dilations.size();
  std::size_t files = 0, rows_ok = 0, rows = 0;
  bool starts_uniform = true, header_ok = true;
  for (std::size_t i = 0; i <= layers; ++i) {
    const fs::path p = dir / (i < layers ? "alpha_noise0.5_layer" + std::to_string(i) + ".csv"
                                         : std::string("alpha_noise0.5_mean.csv"));
    if (!fs::exists(p)) continue;
    ++files;
    const auto csv = read_csv(p);
    header_ok = header_ok && !csv.empty() &&
                csv[0] == std::vector<std::string>{"step", "alpha_ave", "alpha_gauss",
                                                   "alpha_learned", "alpha_none"};
    for (std::size_t j = 1; j < csv.size(); ++j) {
      ++rows;
      double sum = 0.0;
      bool pos = csv[j].size() == 5;
      for (std::size_t k = 1; k < csv[j].size(); ++k) {
        const double v = std::stod(csv[j][k]);
        pos = pos && v > 0.0;
        sum += v;
        if (j == 1) starts_uniform = starts_uniform && std::abs(v - 0.25) < 1e-15;
      }
      if (pos && std::abs(sum - 1.0) <= 1e-9) ++rows_ok;
    }
  }
  std::string trend = "(no trend line)";
  std::istringstream summary(slurp(dir / "run_summary.txt"));
  for (std::string l; std::getline(summary, l);)
    if (l.rfind("alpha trend", 0) == 0) trend = l;
  return {files == layers + 1 && header_ok && starts_uniform && rows == rows_ok && rows > 0,
          std::to_string(files) + " trajectory files, " + std::to_string(rows_ok) + "/" +
              std::to_string(rows) + " rows on the simplex; " + trend};
}

// ---------------------------------------------------------------------------

// Drops the named timing columns from CSV text.
std::string without_columns(const std::string& text, const std::set<std::string>& drop) {
  std::istringstream is(text);
  std::string out, line;
  std::vector<bool> keep;
  bool header = true;
  while (std::getline(is, line)) {
    const auto cells = split(line);
    if (header) {
      for (const auto& c : cells) keep.push_back(!drop.count(c));
      header = false;
    }
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (i >= keep.size() || keep[i]) out += cells[i] + ",";
    out += "\n";
  }
  return out;
}

std::string sorted_lines(const std::string& text) {
  std::istringstream is(text);
  std::vector<std::string> lines;
  for (std::string l; std::getline(is, l);) lines.push_back(l);
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

Verdict determinism() {
  const std::set<std::string> timing{"sec_per_step", "mean_sec_per_step", "median_ms", "iqr_ms",
                                     "overhead_pct"};
  const std::vector<std::string> small{
      "dataset.count=6",          "dataset.height=32",       "dataset.width=32",
      "model.channels=4",         "training.steps=40",       "training.crop_size=32",
      "training.batch_size=2",    "training.log_interval=10", "experiment.train_count=8",
      "experiment.eval_count=4",  "experiment.seeds=[1,2]",  "bench.reps=1",
      "bench.warmup=0",           "bench.dataset_size=2",    "gradcheck.modes=[\"learned\",\"aggregated\"]",
      "experiment.modes=[\"none\",\"average\",\"aggregated\"]"};

  auto run_all = [&](const fs::path& dir) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    int worst = 0;
    for (const char* cmd : {"generate", "compare", "analyze", "gradcheck", "bench"}) {
      std::vector<std::string> args{"sdconv", cmd, "-o", (dir / cmd).string()};
      for (const auto& s : small) {
        args.push_back("--set");
        args.push_back(s);
      }
      std::vector<const char*> argv;
      for (const auto& a : args) argv.push_back(a.c_str());
      std::ostringstream out, err;
      worst = std::max(worst, cli::run(static_cast<int>(argv.size()), argv.data(), out, err));
    }
    return worst;
  };
  const fs::path a = g_work / "determinism_a", b = g_work / "determinism_b";
  if (run_all(a) != 0 || run_all(b) != 0) return {false, "a command failed"};

  std::size_t compared = 0, identical = 0;
  std::string differing;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), a);
    const std::string ext = rel.extension().string();
    if (ext != ".csv" && ext != ".sdt" && ext != ".jsonl") continue;
    ++compared;
    std::string x = slurp(entry.path()), y = slurp(b / rel);
    if (ext == ".csv") {
      x = without_columns(x, timing);
      y = without_columns(y, timing);
    }
    // Bench rows are ranked by measured time, so only their content is fixed.
    if (rel.filename() == "bench.csv") {
      x = sorted_lines(x);
      y = sorted_lines(y);
    }
    if (x == y && fs::exists(b / rel)) {
      ++identical;
    } else {
      differing += " " + rel.string();
    }
  }
  return {compared > 0 && identical == compared,
          std::to_string(identical) + "/" + std::to_string(compared) +
              " output files identical outside timing columns" +
              (differing.empty() ? "" : "; differ:" + differing)};
}

}  // namespace

int main(int argc, char** argv) {
  cli::retain_heap_memory();
  std::set<int> selected;
  g_work = fs::temp_directory_path() / "sdconv_acceptance";
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--work-dir" && i + 1 < argc) {
      g_work = argv[++i];
    } else {
      selected.insert(std::stoi(a));
    }
  }
  fs::create_directories(g_work);

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"equivalence suite", equivalence}, {"gradient suite", gradients},
      {"gridding reproduction", gridding}, {"simplex invariant", simplex},
      {"desk-scale quality direction", quality}, {"overhead ordering", overhead},
      {"trajectory artifact", trajectory}, {"determinism", determinism}};

  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    all = all && v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << criteria[i].first
              << ", " << fmt(sec) << " s): " << v.detail << std::endl;
  }
  return all ? 0 : 1;
}
