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

#include "sdconv/gridding.hpp"

#include <algorithm>
#include <bit>

#include "sdconv/error.hpp"

namespace sdconv {

namespace {

using Bits = std::vector<std::uint64_t>;

// One propagation stage: out(p) = union over offsets d of in(p + d), skipping
// positions outside the image (they carry zeros).
Bits propagate(const Bits& in, int H, int W, std::size_t words,
               const std::vector<std::pair<int, int>>& offsets) {
  Bits out(in.size(), 0);
  for (int h = 0; h < H; ++h) {
    for (int w = 0; w < W; ++w) {
      std::uint64_t* dst = out.data() + (static_cast<std::size_t>(h) * W + w) * words;
      for (auto [dy, dx] : offsets) {
        const int hh = h + dy;
        const int ww = w + dx;
        if (hh < 0 || hh >= H || ww < 0 || ww >= W) continue;
        const std::uint64_t* src =
            in.data() + (static_cast<std::size_t>(hh) * W + ww) * words;
        for (std::size_t i = 0; i < words; ++i) dst[i] |= src[i];
      }
    }
  }
  return out;
}

}  // namespace

void LayerStack::validate() const {
  if (layers.empty()) throw ParameterError("layer stack is empty");
  for (const StackLayer& l : layers) {
    l.conv.validate();
    if (l.smoothing != FilterKind::none && l.filter_size < 1) {
      throw ParameterError("smoothing filter size must be >= 1");
    }
  }
}

int LayerStack::reach_before() const {
  int r = 0;
  for (const StackLayer& l : layers) {
    r += (l.conv.kernel_size / 2) * l.conv.dilation + l.support() / 2;
  }
  return r;
}

int LayerStack::reach_after() const {
  int r = 0;
  for (const StackLayer& l : layers) {
    const int s = l.support();
    r += (l.conv.kernel_size / 2) * l.conv.dilation + (s - 1 - s / 2);
  }
  return r;
}

int LayerStack::span() const { return reach_before() + reach_after() + 1; }

DependencyMap::DependencyMap(Extent extent, int reach_before, int reach_after,
                             std::vector<std::uint64_t> bits)
    : extent_(extent),
      reach_before_(reach_before),
      reach_after_(reach_after),
      words_((static_cast<std::size_t>(extent.height) * extent.width + 63) / 64),
      bits_(std::move(bits)) {}

bool DependencyMap::is_interior(int h, int w) const {
  return h - reach_before_ >= 0 && h + reach_after_ < extent_.height &&
         w - reach_before_ >= 0 && w + reach_after_ < extent_.width;
}

const std::uint64_t* DependencyMap::set(int h, int w) const {
  if (h < 0 || h >= extent_.height || w < 0 || w >= extent_.width) {
    throw ParameterError("pixel (" + std::to_string(h) + "," + std::to_string(w) +
                         ") outside the traced extent");
  }
  return bits_.data() + (static_cast<std::size_t>(h) * extent_.width + w) * words_;
}

bool DependencyMap::depends(int out_h, int out_w, int in_h, int in_w) const {
  const std::uint64_t* s = set(out_h, out_w);
  if (in_h < 0 || in_h >= extent_.height || in_w < 0 || in_w >= extent_.width) {
    return false;
  }
  const std::size_t bit = static_cast<std::size_t>(in_h) * extent_.width + in_w;
  return (s[bit / 64] >> (bit % 64)) & 1u;
}

std::vector<std::pair<int, int>> DependencyMap::dependencies(int out_h, int out_w) const {
  std::vector<std::pair<int, int>> out;
  for (int h = 0; h < extent_.height; ++h) {
    for (int w = 0; w < extent_.width; ++w) {
      if (depends(out_h, out_w, h, w)) out.emplace_back(h, w);
    }
  }
  return out;
}

std::size_t DependencyMap::count(int out_h, int out_w) const {
  const std::uint64_t* s = set(out_h, out_w);
  std::size_t n = 0;
  for (std::size_t i = 0; i < words_; ++i) n += static_cast<std::size_t>(std::popcount(s[i]));
  return n;
}

bool DependencyMap::disjoint(int h0, int w0, int h1, int w1) const {
  const std::uint64_t* a = set(h0, w0);
  const std::uint64_t* b = set(h1, w1);
  for (std::size_t i = 0; i < words_; ++i) {
    if (a[i] & b[i]) return false;
  }
  return true;
}

DependencyMap trace_dependencies(const LayerStack& stack, Extent extent) {
  stack.validate();
  const int span = stack.span();
  if (extent.height < span || extent.width < span) {
    throw ExtentTooSmallError("extent " + std::to_string(extent.height) + "x" +
                                  std::to_string(extent.width) +
                                  " has no interior pixel; need at least " +
                                  std::to_string(span) + "x" + std::to_string(span),
                              span);
  }
  const int H = extent.height;
  const int W = extent.width;
  const std::size_t words = (static_cast<std::size_t>(H) * W + 63) / 64;

  Bits deps(static_cast<std::size_t>(H) * W * words, 0);
  for (std::size_t p = 0; p < static_cast<std::size_t>(H) * W; ++p) {
    deps[p * words + p / 64] |= std::uint64_t{1} << (p % 64);
  }

  for (const StackLayer& layer : stack.layers) {
    const int s = layer.support();
    if (s > 1) {
      std::vector<std::pair<int, int>> window;
      for (int a = 0; a < s; ++a) {
        for (int b = 0; b < s; ++b) window.emplace_back(a - s / 2, b - s / 2);
      }
      deps = propagate(deps, H, W, words, window);
    }
    const int K = layer.conv.kernel_size;
    const int r = layer.conv.dilation;
    std::vector<std::pair<int, int>> taps;
    for (int a = 0; a < K; ++a) {
      for (int b = 0; b < K; ++b) taps.emplace_back((a - K / 2) * r, (b - K / 2) * r);
    }
    deps = propagate(deps, H, W, words, taps);
  }
  return DependencyMap(extent, stack.reach_before(), stack.reach_after(),
                       std::move(deps));
}

double gridding_score(const DependencyMap& map) {
  const Extent e = map.extent();
  std::size_t pairs = 0;
  std::size_t disjoint = 0;
  for (int h = 0; h < e.height; ++h) {
    for (int w = 0; w < e.width; ++w) {
      if (!map.is_interior(h, w)) continue;
      if (w + 1 < e.width && map.is_interior(h, w + 1)) {
        ++pairs;
        if (map.disjoint(h, w, h, w + 1)) ++disjoint;
      }
      if (h + 1 < e.height && map.is_interior(h + 1, w)) {
        ++pairs;
        if (map.disjoint(h, w, h + 1, w)) ++disjoint;
      }
    }
  }
  return pairs == 0 ? 0.0 : static_cast<double>(disjoint) / static_cast<double>(pairs);
}

std::string export_dependency_art(const DependencyMap& map, int center_h, int center_w) {
  if (!map.is_interior(center_h, center_w)) {
    throw ParameterError("pixel (" + std::to_string(center_h) + "," +
                         std::to_string(center_w) + ") is not interior");
  }
  const Extent e = map.extent();
  std::string art;
  art.reserve(static_cast<std::size_t>(e.height) * (e.width + 1));
  for (int h = 0; h < e.height; ++h) {
    for (int w = 0; w < e.width; ++w) {
      art.push_back(map.depends(center_h, center_w, h, w) ? '#' : '.');
    }
    art.push_back('\n');
  }
  return art;
}

}  // namespace sdconv
