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

#include "oracles.hpp"

namespace oracle {

Tensor dense_conv(const Tensor& x, const Tensor& w, int dilation) {
  const auto& xs = x.shape();
  const auto& ws = w.shape();
  const long K = static_cast<long>(ws.h);
  const long H = static_cast<long>(xs.h), W = static_cast<long>(xs.w);
  Tensor y(sdconv::Shape{xs.n, ws.n, xs.h, xs.w});
  for (std::size_t n = 0; n < xs.n; ++n) {
    for (std::size_t o = 0; o < ws.n; ++o) {
      for (long h = 0; h < H; ++h) {
        for (long col = 0; col < W; ++col) {
          double acc = 0.0;
          for (std::size_t c = 0; c < xs.c; ++c) {
            for (long k1 = 0; k1 < K; ++k1) {
              for (long k2 = 0; k2 < K; ++k2) {
                const long ih = h + (k1 - K / 2) * dilation;
                const long iw = col + (k2 - K / 2) * dilation;
                if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
                acc += w.at(o, c, static_cast<std::size_t>(k1), static_cast<std::size_t>(k2)) *
                       x.at(n, c, static_cast<std::size_t>(ih), static_cast<std::size_t>(iw));
              }
            }
          }
          y.at(n, o, static_cast<std::size_t>(h), static_cast<std::size_t>(col)) = acc;
        }
      }
    }
  }
  return y;
}

Tensor depthwise(const Tensor& x, const Tensor& v) {
  const auto& xs = x.shape();
  const long S = static_cast<long>(v.shape().h);
  const long H = static_cast<long>(xs.h), W = static_cast<long>(xs.w);
  Tensor y(xs);
  for (std::size_t n = 0; n < xs.n; ++n) {
    for (std::size_t c = 0; c < xs.c; ++c) {
      for (long h = 0; h < H; ++h) {
        for (long col = 0; col < W; ++col) {
          double acc = 0.0;
          for (long a = 0; a < S; ++a) {
            for (long b = 0; b < S; ++b) {
              const long ih = h + a - S / 2, iw = col + b - S / 2;
              if (ih < 0 || ih >= H || iw < 0 || iw >= W) continue;
              acc += v.at(0, 0, static_cast<std::size_t>(a), static_cast<std::size_t>(b)) *
                     x.at(n, c, static_cast<std::size_t>(ih), static_cast<std::size_t>(iw));
            }
          }
          y.at(n, c, static_cast<std::size_t>(h), static_cast<std::size_t>(col)) = acc;
        }
      }
    }
  }
  return y;
}

std::vector<std::set<int>> impulse_dependencies(const sdconv::LayerStack& stack,
                                                sdconv::Extent extent) {
  const auto H = static_cast<std::size_t>(extent.height);
  const auto W = static_cast<std::size_t>(extent.width);
  std::vector<std::set<int>> deps(H * W);
  for (std::size_t i = 0; i < H * W; ++i) {
    Tensor x(sdconv::Shape{1, 1, H, W});
    x[i] = 1.0;
    for (const sdconv::StackLayer& layer : stack.layers) {
      const auto s = static_cast<std::size_t>(layer.support());
      if (s > 1) x = depthwise(x, sdconv::full(sdconv::Shape{1, 1, s, s}, 1.0));
      const auto K = static_cast<std::size_t>(layer.conv.kernel_size);
      x = dense_conv(x, sdconv::full(sdconv::Shape{1, 1, K, K}, 1.0), layer.conv.dilation);
    }
    for (std::size_t o = 0; o < H * W; ++o) {
      if (x[o] != 0.0) deps[o].insert(static_cast<int>(i));
    }
  }
  return deps;
}

std::vector<std::optional<double>> iou(const std::vector<int>& predicted,
                                       const std::vector<int>& truth, int classes) {
  std::vector<std::optional<double>> out;
  for (int c = 0; c < classes; ++c) {
    long inter = 0, uni = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const bool p = predicted[i] == c, t = truth[i] == c;
      inter += (p && t) ? 1 : 0;
      uni += (p || t) ? 1 : 0;
    }
    if (uni == 0) {
      out.emplace_back();
    } else {
      out.emplace_back(static_cast<double>(inter) / static_cast<double>(uni));
    }
  }
  return out;
}

Tensor central_difference(const std::function<double(const Tensor&)>& f, const Tensor& x,
                          double h) {
  Tensor g(x.shape());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

}  // namespace oracle
