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
#include <ostream>

#include "json.hpp"

#include "sdconv/error.hpp"
#include "sdconv/rng.hpp"
#include "sdconv/segmentation.hpp"

namespace sdconv {

namespace {

constexpr int kBaseSize = 4;
constexpr int kMaxRetries = 1000;

// Rasterizes a candidate shape into `mask` coordinates; returns covered pixels.
std::vector<std::size_t> rasterize(const ShapeRecord& s, int W) {
  std::vector<std::size_t> px;
  const double cy = (s.top + s.bottom - 1) / 2.0;
  const double cx = (s.left + s.right - 1) / 2.0;
  const double ry = (s.bottom - s.top) / 2.0;
  const double rx = (s.right - s.left) / 2.0;
  for (int h = s.top; h < s.bottom; ++h) {
    for (int w = s.left; w < s.right; ++w) {
      if (s.kind == ShapeKind::disc) {
        const double dy = (h - cy) / ry;
        const double dx = (w - cx) / rx;
        if (dy * dy + dx * dx > 1.0) continue;
      }
      px.push_back(static_cast<std::size_t>(h) * W + w);
    }
  }
  return px;
}

}  // namespace

double class_intensity(int label, int classes) {
  return static_cast<double>(label) / static_cast<double>(classes - 1);
}

std::vector<SynthSample> generate_dataset(const DatasetConfig& cfg, Rng& rng) {
  if (cfg.classes < 2) throw ParameterError("need at least 2 classes");
  if (cfg.extent.height < 32 || cfg.extent.width < 32) {
    throw ParameterError("synthetic images must be at least 32x32");
  }
  if (cfg.channels < 1) throw ParameterError("need at least one image channel");
  if (cfg.noise_level < 0.0) throw ParameterError("noise level must be >= 0");

  const int H = cfg.extent.height;
  const int W = cfg.extent.width;
  const auto C = static_cast<std::size_t>(cfg.channels);
  std::vector<SynthSample> out;
  out.reserve(cfg.count);
  for (std::size_t i = 0; i < cfg.count; ++i) {
    SynthSample s;
    s.noise_level = cfg.noise_level;
    s.labels.assign(static_cast<std::size_t>(H) * W, 0);
    std::vector<char> occupied(static_cast<std::size_t>(H) * W, 0);

    const int shapes = 1 + static_cast<int>(rng.below(4));
    for (int k = 0; k < shapes; ++k) {
      bool placed = false;
      for (int attempt = 0; attempt < kMaxRetries && !placed; ++attempt) {
        ShapeRecord rec;
        rec.kind = rng.below(2) == 0 ? ShapeKind::rectangle : ShapeKind::disc;
        rec.label = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.classes - 1)));
        rec.scale = 1 << rng.below(3);
        const int base = kBaseSize * rec.scale;
        int hh = base;
        int ww = base;
        if (rec.kind == ShapeKind::rectangle) {
          // Aspect jitter in [0.5, 1.5] of the base side.
          hh = std::max(2, static_cast<int>(base * rng.uniform(0.5, 1.5)));
          ww = std::max(2, static_cast<int>(base * rng.uniform(0.5, 1.5)));
        } else {
          hh = ww = base + 1;
        }
        if (hh > H || ww > W) continue;
        rec.top = static_cast<int>(rng.below(static_cast<std::uint64_t>(H - hh + 1)));
        rec.left = static_cast<int>(rng.below(static_cast<std::uint64_t>(W - ww + 1)));
        rec.bottom = rec.top + hh;
        rec.right = rec.left + ww;
        const std::vector<std::size_t> px = rasterize(rec, W);
        if (px.empty()) continue;
        const bool overlaps = std::any_of(px.begin(), px.end(),
                                          [&](std::size_t p) { return occupied[p] != 0; });
        if (overlaps) continue;
        for (std::size_t p : px) {
          occupied[p] = 1;
          s.labels[p] = rec.label;
        }
        s.shapes.push_back(rec);
        placed = true;
      }
      if (!placed) {
        throw GenerationError("could not place shape " + std::to_string(k + 1) +
                              " of sample " + std::to_string(i) + " after " +
                              std::to_string(kMaxRetries) + " attempts");
      }
    }

    s.image = Tensor(Shape{1, C, static_cast<std::size_t>(H), static_cast<std::size_t>(W)});
    for (std::size_t c = 0; c < C; ++c) {
      double* p = s.image.plane(0, c);
      for (std::size_t j = 0; j < s.labels.size(); ++j) {
        p[j] = class_intensity(s.labels[j], cfg.classes);
        if (cfg.noise_level > 0.0) p[j] += cfg.noise_level * rng.normal();
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

Tensor stack_images(std::span<const SynthSample> data) {
  if (data.empty()) return Tensor();
  const Shape& s0 = data.front().image.shape();
  Tensor out(Shape{data.size(), s0.c, s0.h, s0.w});
  const std::size_t chunk = s0.c * s0.plane();
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].image.shape() != s0) throw ParameterError("dataset images differ in shape");
    std::copy(data[i].image.data().begin(), data[i].image.data().end(),
              out.data().begin() + static_cast<std::ptrdiff_t>(i * chunk));
  }
  return out;
}

Tensor stack_labels(std::span<const SynthSample> data) {
  if (data.empty()) return Tensor();
  const Shape& s0 = data.front().image.shape();
  Tensor out(Shape{data.size(), 1, s0.h, s0.w});
  for (std::size_t i = 0; i < data.size(); ++i) {
    double* p = out.plane(i, 0);
    for (std::size_t j = 0; j < data[i].labels.size(); ++j) p[j] = data[i].labels[j];
  }
  return out;
}

std::vector<SynthSample> unstack_dataset(const Tensor& images, const Tensor& labels,
                                         double noise_level) {
  const Shape& is = images.shape();
  const Shape& ls = labels.shape();
  if (ls.n != is.n || ls.c != 1 || ls.h != is.h || ls.w != is.w) {
    throw ParameterError("label tensor " + ls.str() + " does not match images " +
                         is.str());
  }
  std::vector<SynthSample> out(is.n);
  for (std::size_t i = 0; i < is.n; ++i) {
    SynthSample& s = out[i];
    s.noise_level = noise_level;
    s.image = Tensor(Shape{1, is.c, is.h, is.w});
    for (std::size_t c = 0; c < is.c; ++c) {
      std::copy(images.plane(i, c), images.plane(i, c) + is.plane(), s.image.plane(0, c));
    }
    const double* lp = labels.plane(i, 0);
    s.labels.resize(is.plane());
    for (std::size_t j = 0; j < is.plane(); ++j) s.labels[j] = static_cast<int>(lp[j]);
  }
  return out;
}

void write_dataset_metadata(std::ostream& os, std::span<const SynthSample> data,
                            int classes) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    const SynthSample& s = data[i];
    nlohmann::ordered_json j;
    j["index"] = i;
    j["height"] = s.height();
    j["width"] = s.width();
    j["noise_level"] = s.noise_level;
    nlohmann::ordered_json shapes = nlohmann::ordered_json::array();
    for (const ShapeRecord& r : s.shapes) {
      shapes.push_back({{"kind", r.kind == ShapeKind::disc ? "disc" : "rectangle"},
                        {"label", r.label},
                        {"scale", r.scale},
                        {"top", r.top},
                        {"left", r.left},
                        {"bottom", r.bottom},
                        {"right", r.right}});
    }
    j["shapes"] = std::move(shapes);
    std::vector<std::size_t> hist(static_cast<std::size_t>(classes), 0);
    for (int l : s.labels) {
      if (l >= 0 && l < classes) ++hist[static_cast<std::size_t>(l)];
    }
    j["class_histogram"] = hist;
    os << j.dump() << '\n';
  }
}

}  // namespace sdconv
