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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sdconv/tensor.hpp"

namespace sdconv {

class Rng;

enum class Padding { zero_same };

/// Square K x K kernel with taps spaced `dilation` pixels apart, stride 1.
///
/// Tap (k1, k2) of output pixel (h, w) reads input pixel
/// (h + (k1 - K/2) * r, w + (k2 - K/2) * r); positions outside the image read
/// zero, so the output keeps the input's spatial extent.
struct ConvSpec {
  int kernel_size = 3;
  int dilation = 1;
  Padding padding = Padding::zero_same;

  void validate() const;
  /// Receptive span per axis: (K - 1) * r + 1.
  int span() const { return (kernel_size - 1) * dilation + 1; }
};

/// Dense weights of shape (out, in, K, K).
struct ConvWeights {
  Tensor kernel;

  ConvWeights() = default;
  explicit ConvWeights(Tensor k);
  ConvWeights(std::size_t out_channels, std::size_t in_channels, int kernel_size);

  std::size_t out_channels() const { return kernel.shape().n; }
  std::size_t in_channels() const { return kernel.shape().c; }
  int kernel_size() const { return static_cast<int>(kernel.shape().h); }
};

enum class FilterKind { none, average, gaussian, learned, aggregated };

std::string_view to_string(FilterKind kind);
std::optional<FilterKind> parse_filter_kind(std::string_view name);

/// Per-channel interpolation filter applied ahead of a dilated convolution.
///
/// `weights` is the realized s x s kernel stored as a (1, 1, s, s) tensor. The
/// same kernel is applied to every channel independently.
struct SmoothingFilter {
  FilterKind kind = FilterKind::none;
  int size = 1;
  double sigma = 0.0;
  Tensor weights;
  bool trainable = false;

  /// 1-D profile p with weights = outer(p, p), for the kinds that factor
  /// exactly (none, average, gaussian). Empty for learned / aggregated.
  std::vector<double> profile() const;
};

/// Builds the size-r filter of the requested kind. r must be odd; `sigma` is
/// required for gaussian and `rng` for learned.
SmoothingFilter build_smoothing_filter(FilterKind kind, int r,
                                       std::optional<double> sigma = std::nullopt,
                                       Rng* rng = nullptr);

/// Filter of the given kind wrapping an arbitrary square kernel (1,1,s,s).
SmoothingFilter filter_from_kernel(FilterKind kind, Tensor kernel);

// ---------------------------------------------------------------------------
// Forward operations
// ---------------------------------------------------------------------------

Tensor dilated_conv2d(const Tensor& x, const ConvWeights& w, const ConvSpec& spec);

/// Depthwise smoothing of every channel with v's s x s kernel (zero-same).
Tensor smooth_channelwise(const Tensor& x, const SmoothingFilter& v);

/// dilated_conv2d(smooth_channelwise(x, v), w, spec). Requires v.size == r.
Tensor smoothed_dilated_conv2d(const Tensor& x, const SmoothingFilter& v,
                               const ConvWeights& w, const ConvSpec& spec);

/// Dense kernel of extent (K - 1) * r + s with coefficient w[k] * v[n] at
/// offset r * k + n. Requires v.size == r.
ConvWeights fuse_effective_kernel(const SmoothingFilter& v, const ConvWeights& w,
                                  const ConvSpec& spec);

/// Single-pass evaluation of smoothed_dilated_conv2d through the fused kernel.
///
/// Interior pixels (every dilated tap inside the image) use one dense
/// convolution with fuse_effective_kernel's output. The border band, where the
/// two-stage form zero-pads the smoothed intermediate, is evaluated tap by tap
/// so the result matches the two-stage definition everywhere.
Tensor smoothed_dilated_conv2d_fused(const Tensor& x, const SmoothingFilter& v,
                                     const ConvWeights& w, const ConvSpec& spec);

/// Two 1-D passes (rows, then columns). Only for none / average / gaussian.
Tensor smooth_separable(const Tensor& x, const SmoothingFilter& v);

// ---------------------------------------------------------------------------
// Raw kernels, shared by the forward ops and the reverse-mode rules
// ---------------------------------------------------------------------------

namespace kernels {

/// y += dilated correlation of x with w.
void conv_forward(const Tensor& x, const Tensor& w, int dilation, Tensor& y);
/// gx += adjoint of conv_forward applied to gy.
void conv_backward_input(const Tensor& gy, const Tensor& w, int dilation, Tensor& gx);
/// gw += d<y, gy>/dw.
void conv_backward_weights(const Tensor& x, const Tensor& gy, int dilation, Tensor& gw);

/// Depthwise correlation with one (1,1,s,s) kernel shared by all channels.
/// Any s >= 1; tap n reads offset n - s/2 (floor).
void depthwise_forward(const Tensor& x, const Tensor& v, Tensor& y);
void depthwise_backward_input(const Tensor& gy, const Tensor& v, Tensor& gx);
void depthwise_backward_filter(const Tensor& x, const Tensor& gy, Tensor& gv);

/// Row pass then column pass with 1-D profile p (odd length).
void separable_forward(const Tensor& x, const std::vector<double>& p, Tensor& y);
void separable_backward_input(const Tensor& gy, const std::vector<double>& p,
                              Tensor& gx);

}  // namespace kernels

}  // namespace sdconv
