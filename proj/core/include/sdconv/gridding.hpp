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

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sdconv/conv.hpp"

namespace sdconv {

/// One layer of a traced stack: optional per-channel smoothing of size
/// `filter_size` followed by a dilated convolution.
struct StackLayer {
  ConvSpec conv;
  FilterKind smoothing = FilterKind::none;
  int filter_size = 1;

  /// Structural smoothing support; 1 when the layer is unsmoothed.
  int support() const { return smoothing == FilterKind::none ? 1 : filter_size; }
};

struct LayerStack {
  std::vector<StackLayer> layers;

  void validate() const;
  /// Bounding box per axis of one output pixel's receptive field.
  int span() const;
  /// Pixels the receptive field reaches before / after the output pixel.
  int reach_before() const;
  int reach_after() const;
};

struct Extent {
  int height = 0;
  int width = 0;

  bool operator==(const Extent&) const = default;
};

/// Structural dependency sets: for every output pixel, which input pixels can
/// influence it through the stack (zero-same padding at every stage).
class DependencyMap {
 public:
  DependencyMap(Extent extent, int reach_before, int reach_after,
                std::vector<std::uint64_t> bits);

  Extent extent() const { return extent_; }
  bool is_interior(int h, int w) const;
  bool depends(int out_h, int out_w, int in_h, int in_w) const;
  /// Input coordinates (h, w) feeding output pixel (out_h, out_w), row-major.
  std::vector<std::pair<int, int>> dependencies(int out_h, int out_w) const;
  std::size_t count(int out_h, int out_w) const;
  bool disjoint(int h0, int w0, int h1, int w1) const;

  bool operator==(const DependencyMap&) const = default;

 private:
  const std::uint64_t* set(int h, int w) const;

  Extent extent_;
  int reach_before_;
  int reach_after_;
  std::size_t words_;
  std::vector<std::uint64_t> bits_;
};

/// Propagates dependency sets layer by layer. Throws ExtentTooSmallError
/// (carrying the required extent) when no pixel has a boundary-free field.
DependencyMap trace_dependencies(const LayerStack& stack, Extent extent);

/// Fraction of 4-adjacent interior output pairs with disjoint dependency sets.
double gridding_score(const DependencyMap& map);

/// H lines of W characters: '#' for inputs feeding `center`, '.' otherwise.
std::string export_dependency_art(const DependencyMap& map, int center_h, int center_w);

}  // namespace sdconv
