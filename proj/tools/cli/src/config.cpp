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

#include "sdconv_cli/config.hpp"

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sdconv/error.hpp"

namespace sdconv::cli {

namespace {

using json = nlohmann::json;

// Typed, strict view of one JSON object. Every key that is read gets marked;
// finish() rejects whatever is left over.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  std::string key_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json* find(const std::string& key) {
    auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  std::optional<Section> sub(const std::string& key) {
    const json* v = find(key);
    if (v == nullptr) return std::nullopt;
    return Section(*v, key_path(key));
  }

  template <class Int>
  void integer(const std::string& key, Int& out, long long min,
               long long max = std::numeric_limits<long long>::max()) {
    const json* v = find(key);
    if (v == nullptr) return;
    out = static_cast<Int>(as_integer(*v, key_path(key), min, max));
  }

  void u64(const std::string& key, std::uint64_t& out) {
    const json* v = find(key);
    if (v == nullptr) return;
    out = as_u64(*v, key_path(key));
  }

  void real(const std::string& key, double& out, double min, bool min_open = false,
            double max = std::numeric_limits<double>::infinity(), bool max_open = false) {
    const json* v = find(key);
    if (v == nullptr) return;
    out = as_real(*v, key_path(key), min, min_open, max, max_open);
  }

  void boolean(const std::string& key, bool& out) {
    const json* v = find(key);
    if (v == nullptr) return;
    if (!v->is_boolean()) throw ConfigError(key_path(key) + ": expected true or false");
    out = v->get<bool>();
  }

  std::optional<std::string> string(const std::string& key) {
    const json* v = find(key);
    if (v == nullptr) return std::nullopt;
    if (!v->is_string()) throw ConfigError(key_path(key) + ": expected a string");
    return v->get<std::string>();
  }

  const json* array(const std::string& key) {
    const json* v = find(key);
    if (v != nullptr && !v->is_array()) {
      throw ConfigError(key_path(key) + ": expected an array");
    }
    return v;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.contains(it.key())) {
        throw ConfigError("unknown key '" + key_path(it.key()) + "'");
      }
    }
  }

  static long long as_integer(const json& v, const std::string& path, long long min,
                              long long max) {
    if (!v.is_number_integer()) throw ConfigError(path + ": expected an integer");
    if (v.is_number_unsigned() &&
        v.get<std::uint64_t>() > static_cast<std::uint64_t>(max)) {
      throw ConfigError(path + ": value out of range");
    }
    const long long x = v.get<long long>();
    if (x < min || x > max) {
      throw ConfigError(path + ": " + std::to_string(x) + " is outside [" +
                        std::to_string(min) + ", " + std::to_string(max) + "]");
    }
    return x;
  }

  static std::uint64_t as_u64(const json& v, const std::string& path) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<long long>() >= 0) {
      return static_cast<std::uint64_t>(v.get<long long>());
    }
    throw ConfigError(path + ": expected a non-negative integer");
  }

  static double as_real(const json& v, const std::string& path, double min, bool min_open,
                        double max, bool max_open) {
    if (!v.is_number()) throw ConfigError(path + ": expected a number");
    const double x = v.get<double>();
    const bool low = min_open ? !(x > min) : !(x >= min);
    const bool high = max_open ? !(x < max) : !(x <= max);
    if (low || high) {
      std::ostringstream os;
      os << path << ": " << x << " is out of range";
      throw ConfigError(os.str());
    }
    return x;
  }

 private:
  std::string where() const { return path_.empty() ? "config" : "'" + path_ + "'"; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<SmoothingMode> parse_modes(const json& arr, const std::string& path) {
  std::vector<SmoothingMode> modes;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string item = path + "[" + std::to_string(i) + "]";
    if (!arr[i].is_string()) throw ConfigError(item + ": expected a mode name");
    const auto m = parse_smoothing_mode(arr[i].get<std::string>());
    if (!m) {
      throw ConfigError(item + ": unknown smoothing mode '" + arr[i].get<std::string>() +
                        "'");
    }
    modes.push_back(*m);
  }
  return modes;
}

FilterKind parse_kind(const std::string& name, const std::string& path) {
  const auto k = parse_filter_kind(name);
  if (!k || *k == FilterKind::learned || *k == FilterKind::aggregated) {
    throw ConfigError(path + ": smoothing must be none, average or gaussian, got '" +
                      name + "'");
  }
  return *k;
}

void read_dataset(Section s, DatasetSection& d) {
  s.integer("count", d.data.count, 1);
  s.integer("height", d.data.extent.height, 32, 4096);
  s.integer("width", d.data.extent.width, 32, 4096);
  s.integer("classes", d.data.classes, 2, 255);
  s.integer("channels", d.data.channels, 1, 3);
  if (d.data.channels == 2) throw ConfigError(s.key_path("channels") + ": must be 1 or 3");
  s.real("noise_level", d.data.noise_level, 0.0);
  s.u64("seed", d.seed);
  s.finish();
}

void read_model(Section s, ModelConfig& m) {
  s.integer("channels", m.channels, 1, 1024);
  s.integer("kernel_size", m.kernel_size, 1, 15);
  if (const json* a = s.array("dilations")) {
    m.dilations.clear();
    for (std::size_t i = 0; i < a->size(); ++i) {
      m.dilations.push_back(static_cast<int>(Section::as_integer(
          (*a)[i], s.key_path("dilations") + "[" + std::to_string(i) + "]", 1, 64)));
    }
  }
  s.real("sigma", m.sigma, 0.0, true);
  s.boolean("separable", m.separable);
  s.finish();
}

void read_training(Section s, TrainConfig& t) {
  s.real("learning_rate", t.learning_rate, 0.0);
  s.real("momentum", t.momentum, 0.0, false, 1.0, true);
  s.integer("steps", t.steps, 1);
  s.integer("batch_size", t.batch_size, 1, 4096);
  s.u64("seed", t.seed);
  s.integer("crop_size", t.crop_size, 1, 4096);
  s.integer("log_interval", t.log_interval, 1);
  s.finish();
}

void read_experiment(Section s, ExperimentSection& e) {
  if (const json* a = s.array("modes")) e.modes = parse_modes(*a, s.key_path("modes"));
  if (const json* a = s.array("seeds")) {
    e.seeds.clear();
    for (std::size_t i = 0; i < a->size(); ++i) {
      e.seeds.push_back(
          Section::as_u64((*a)[i], s.key_path("seeds") + "[" + std::to_string(i) + "]"));
    }
  }
  if (const json* a = s.array("noise_levels")) {
    e.noise_levels.clear();
    for (std::size_t i = 0; i < a->size(); ++i) {
      e.noise_levels.push_back(Section::as_real(
          (*a)[i], s.key_path("noise_levels") + "[" + std::to_string(i) + "]", 0.0, false,
          std::numeric_limits<double>::infinity(), false));
    }
  }
  s.integer("train_count", e.train_count, 1);
  s.integer("eval_count", e.eval_count, 1);
  if (auto p = s.string("dataset")) e.dataset = *p;
  s.finish();
  if (e.modes.empty()) throw ConfigError(s.key_path("modes") + ": list is empty");
  if (e.seeds.empty()) throw ConfigError(s.key_path("seeds") + ": list is empty");
  if (e.noise_levels.empty() && !e.dataset) {
    throw ConfigError(s.key_path("noise_levels") + ": list is empty");
  }
}

void read_stack(Section s, StackSection& st) {
  s.integer("layers", st.layers, 1, 16);
  s.integer("kernel_size", st.kernel_size, 1, 15);
  s.integer("dilation", st.dilation, 1, 64);
  if (auto k = s.string("smoothing")) st.smoothing = parse_kind(*k, s.key_path("smoothing"));
  int fs = 0;
  s.integer("filter_size", fs, 1, 64);
  if (fs > 0) st.filter_size = fs;
  s.finish();
}

void read_analysis(Section s, AnalysisSection& a) {
  if (auto e = s.sub("extent")) {
    e->integer("height", a.extent.height, 1, 1024);
    e->integer("width", a.extent.width, 1, 1024);
    e->finish();
  }
  if (const json* arr = s.array("stacks")) {
    a.stacks.clear();
    for (std::size_t i = 0; i < arr->size(); ++i) {
      StackSection st;
      read_stack(Section((*arr)[i], s.key_path("stacks") + "[" + std::to_string(i) + "]"),
                 st);
      a.stacks.push_back(st);
    }
  }
  s.boolean("art", a.art);
  s.finish();
  if (a.stacks.empty()) throw ConfigError(s.key_path("stacks") + ": list is empty");
}

void read_bench(Section s, BenchSection& b) {
  if (const json* arr = s.array("variants")) {
    b.variants.clear();
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const std::string item = s.key_path("variants") + "[" + std::to_string(i) + "]";
      if (!(*arr)[i].is_string()) throw ConfigError(item + ": expected a variant name");
      const auto v = parse_bench_variant((*arr)[i].get<std::string>());
      if (!v) {
        throw ConfigError(item + ": unknown variant '" + (*arr)[i].get<std::string>() + "'");
      }
      b.variants.push_back(*v);
    }
  }
  s.integer("reps", b.options.reps, 1, 1000);
  s.integer("warmup", b.options.warmup, 0, 100000);
  s.integer("steps", b.options.steps, 30, 1000000);
  s.integer("dataset_size", b.options.dataset_size, 1);
  s.finish();
  if (b.variants.empty()) throw ConfigError(s.key_path("variants") + ": list is empty");
  const bool has_baseline = std::any_of(b.variants.begin(), b.variants.end(),
                                        [](const BenchVariant& v) { return v.name == "none"; });
  if (!has_baseline) {
    throw ConfigError(s.key_path("variants") + ": the 'none' baseline is required");
  }
}

void read_gradcheck(Section s, GradcheckSection& g) {
  s.real("tolerance", g.tolerance, 0.0, true);
  s.real("step", g.step, 0.0, true);
  if (const json* a = s.array("modes")) g.modes = parse_modes(*a, s.key_path("modes"));
  s.integer("channels", g.channels, 1, 64);
  s.integer("extent", g.extent, 1, 64);
  s.integer("batch_size", g.batch_size, 1, 64);
  s.u64("seed", g.seed);
  s.finish();
  if (g.modes.empty()) throw ConfigError(s.key_path("modes") + ": list is empty");
}

void apply_override(json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' is malformed");
    if (!node->is_object()) {
      throw ConfigError("override key '" + key + "' descends into a non-object");
    }
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

}  // namespace

LayerStack StackSection::stack() const {
  LayerStack s;
  for (int i = 0; i < layers; ++i) {
    StackLayer l;
    l.conv.kernel_size = kernel_size;
    l.conv.dilation = dilation;
    l.smoothing = smoothing;
    l.filter_size = filter_size.value_or(dilation);
    s.layers.push_back(l);
  }
  return s;
}

RunConfig default_config() {
  RunConfig c;
  c.bench.variants = {*parse_bench_variant("none"), *parse_bench_variant("average"),
                      *parse_bench_variant("gaussian"), *parse_bench_variant("learned")};
  return c;
}

RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
  json root;
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    root = json::object();
  } else {
    try {
      root = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
  }
  for (const std::string& o : overrides) apply_override(root, o);

  RunConfig c = default_config();
  Section top(root, "");
  if (auto p = top.string("output_dir")) {
    if (p->empty()) throw ConfigError("output_dir: must not be empty");
    c.output_dir = *p;
  }
  if (auto s = top.sub("dataset")) read_dataset(*s, c.dataset);
  if (auto s = top.sub("model")) read_model(*s, c.model);
  if (auto s = top.sub("training")) read_training(*s, c.training);
  if (auto s = top.sub("experiment")) read_experiment(*s, c.experiment);
  if (auto s = top.sub("analysis")) read_analysis(*s, c.analysis);
  if (auto s = top.sub("bench")) read_bench(*s, c.bench);
  if (auto s = top.sub("gradcheck")) read_gradcheck(*s, c.gradcheck);
  top.finish();

  c.model.input_channels = c.dataset.data.channels;
  c.model.classes = c.dataset.data.classes;
  try {
    c.model.validate();
    c.training.validate();
    for (const StackSection& st : c.analysis.stacks) st.stack().validate();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  if (c.training.crop_size > c.dataset.data.extent.height ||
      c.training.crop_size > c.dataset.data.extent.width) {
    throw ConfigError("training.crop_size: larger than the dataset extent");
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& file,
                      const std::vector<std::string>& overrides) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot read config file '" + file.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), overrides);
}

}  // namespace sdconv::cli
