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

#include "sdconv/conv.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sdconv/error.hpp"
#include "sdconv/rng.hpp"

namespace sdconv {

namespace {

// Valid [lo, hi) range of output index i such that i + offset is in [0, n).
struct Range {
  std::size_t lo;
  std::size_t hi;
};

Range valid_range(std::size_t n, long offset) {
  long lo = std::max(0L, -offset);
  long hi = std::min(static_cast<long>(n), static_cast<long>(n) - offset);
  if (hi < lo) hi = lo;
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

void check_conv_args(const Tensor& x, const ConvWeights& w, const ConvSpec& spec) {
  spec.validate();
  if (w.kernel.shape().h != w.kernel.shape().w) {
    throw ParameterError("conv weights must be square");
  }
  if (w.kernel_size() != spec.kernel_size) {
    throw ParameterError("conv weights have kernel size " +
                         std::to_string(w.kernel_size()) + " but spec has " +
                         std::to_string(spec.kernel_size));
  }
  if (x.shape().c != w.in_channels()) {
    throw ParameterError("input has " + std::to_string(x.shape().c) +
                         " channels, weights expect " +
                         std::to_string(w.in_channels()));
  }
}

void check_filter(const SmoothingFilter& v) {
  const Shape& s = v.weights.shape();
  if (s.n != 1 || s.c != 1 || s.h != s.w || static_cast<int>(s.h) != v.size ||
      v.size < 1) {
    throw ParameterError("smoothing filter is not realized as a (1,1,s,s) kernel");
  }
}

// Smoothed value of channel (n, c) at (h, w), zero outside the image.
double smoothed_at(const Tensor& x, const Tensor& v, std::size_t n, std::size_t c,
                   long h, long w) {
  const long H = static_cast<long>(x.shape().h);
  const long W = static_cast<long>(x.shape().w);
  if (h < 0 || h >= H || w < 0 || w >= W) return 0.0;
  const long s = static_cast<long>(v.shape().h);
  const long half = s / 2;
  const double* xp = x.plane(n, c);
  double acc = 0.0;
  for (long n1 = 0; n1 < s; ++n1) {
    const long hh = h + n1 - half;
    if (hh < 0 || hh >= H) continue;
    for (long n2 = 0; n2 < s; ++n2) {
      const long ww = w + n2 - half;
      if (ww < 0 || ww >= W) continue;
      acc += v[static_cast<std::size_t>(n1 * s + n2)] * xp[hh * W + ww];
    }
  }
  return acc;
}

}  // namespace

void ConvSpec::validate() const {
  if (kernel_size < 1 || kernel_size % 2 == 0) {
    throw ParameterError("kernel size must be odd and >= 1, got " +
                         std::to_string(kernel_size));
  }
  if (dilation < 1) {
    throw ParameterError("dilation must be >= 1, got " + std::to_string(dilation));
  }
}

ConvWeights::ConvWeights(Tensor k) : kernel(std::move(k)) {}

ConvWeights::ConvWeights(std::size_t out_channels, std::size_t in_channels,
                         int kernel_size)
    : kernel(Shape{out_channels, in_channels, static_cast<std::size_t>(kernel_size),
                   static_cast<std::size_t>(kernel_size)}) {}

std::string_view to_string(FilterKind kind) {
  switch (kind) {
    case FilterKind::none: return "none";
    case FilterKind::average: return "average";
    case FilterKind::gaussian: return "gaussian";
    case FilterKind::learned: return "learned";
    case FilterKind::aggregated: return "aggregated";
  }
  return "unknown";
}

std::optional<FilterKind> parse_filter_kind(std::string_view name) {
  for (FilterKind k : {FilterKind::none, FilterKind::average, FilterKind::gaussian,
                       FilterKind::learned, FilterKind::aggregated}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

std::vector<double> SmoothingFilter::profile() const {
  const int half = size / 2;
  std::vector<double> p(static_cast<std::size_t>(size), 0.0);
  switch (kind) {
    case FilterKind::none:
      p[static_cast<std::size_t>(half)] = 1.0;
      return p;
    case FilterKind::average:
      std::fill(p.begin(), p.end(), 1.0 / size);
      return p;
    case FilterKind::gaussian:
      for (int i = 0; i < size; ++i) {
        const double d = i - half;
        p[static_cast<std::size_t>(i)] =
            std::exp(-d * d / (2.0 * sigma * sigma)) /
            (std::sqrt(2.0 * std::numbers::pi) * sigma);
      }
      return p;
    case FilterKind::learned:
    case FilterKind::aggregated:
      break;
  }
  return {};
}

SmoothingFilter build_smoothing_filter(FilterKind kind, int r,
                                       std::optional<double> sigma, Rng* rng) {
  if (r < 1 || r % 2 == 0) {
    throw ParameterError("smoothing filter size (dilation) must be odd and >= 1, got " +
                         std::to_string(r));
  }
  const auto s = static_cast<std::size_t>(r);
  const int half = r / 2;
  SmoothingFilter f;
  f.kind = kind;
  f.size = r;
  f.weights = Tensor(Shape{1, 1, s, s});
  switch (kind) {
    case FilterKind::none:
      f.weights.at(0, 0, static_cast<std::size_t>(half), static_cast<std::size_t>(half)) = 1.0;
      break;
    case FilterKind::average:
      f.weights.fill(1.0 / (static_cast<double>(r) * r));
      break;
    case FilterKind::gaussian: {
      if (!sigma || !(*sigma > 0.0)) {
        throw ParameterError("gaussian filter requires sigma > 0");
      }
      f.sigma = *sigma;
      const double norm = 1.0 / (2.0 * std::numbers::pi * f.sigma * f.sigma);
      for (int y = -half; y <= half; ++y) {
        for (int x = -half; x <= half; ++x) {
          f.weights.at(0, 0, static_cast<std::size_t>(y + half),
                       static_cast<std::size_t>(x + half)) =
              norm * std::exp(-(x * x + y * y) / (2.0 * f.sigma * f.sigma));
        }
      }
      break;
    }
    case FilterKind::learned: {
      if (rng == nullptr) throw ParameterError("learned filter requires an rng");
      const double bound = 1.0 / r;
      f.weights = random_uniform(Shape{1, 1, s, s}, -bound, bound, *rng);
      f.trainable = true;
      break;
    }
    case FilterKind::aggregated:
      throw ParameterError("aggregated filters are realized from an AggregatedFilter");
  }
  return f;
}

SmoothingFilter filter_from_kernel(FilterKind kind, Tensor kernel) {
  const Shape& s = kernel.shape();
  if (s.n != 1 || s.c != 1 || s.h != s.w || s.h == 0) {
    throw ParameterError("filter kernel must have shape (1,1,s,s), got " + s.str());
  }
  SmoothingFilter f;
  f.kind = kind;
  f.size = static_cast<int>(s.h);
  f.weights = std::move(kernel);
  f.trainable = kind == FilterKind::learned || kind == FilterKind::aggregated;
  return f;
}

Tensor dilated_conv2d(const Tensor& x, const ConvWeights& w, const ConvSpec& spec) {
  check_conv_args(x, w, spec);
  Tensor y(Shape{x.shape().n, w.out_channels(), x.shape().h, x.shape().w});
  kernels::conv_forward(x, w.kernel, spec.dilation, y);
  return y;
}

Tensor smooth_channelwise(const Tensor& x, const SmoothingFilter& v) {
  check_filter(v);
  Tensor y(x.shape());
  kernels::depthwise_forward(x, v.weights, y);
  return y;
}

Tensor smoothed_dilated_conv2d(const Tensor& x, const SmoothingFilter& v,
                               const ConvWeights& w, const ConvSpec& spec) {
  check_conv_args(x, w, spec);
  check_filter(v);
  if (v.size != spec.dilation) {
    throw ParameterError("smoothing filter size " + std::to_string(v.size) +
                         " must equal dilation " + std::to_string(spec.dilation));
  }
  return dilated_conv2d(smooth_channelwise(x, v), w, spec);
}

ConvWeights fuse_effective_kernel(const SmoothingFilter& v, const ConvWeights& w,
                                  const ConvSpec& spec) {
  spec.validate();
  check_filter(v);
  if (v.size != spec.dilation) {
    throw ParameterError("smoothing filter size " + std::to_string(v.size) +
                         " must equal dilation " + std::to_string(spec.dilation));
  }
  if (w.kernel_size() != spec.kernel_size) {
    throw ParameterError("conv weights do not match spec kernel size");
  }
  const int K = spec.kernel_size;
  const int r = spec.dilation;
  const int s = v.size;
  const int extent = (K - 1) * r + s;
  ConvWeights fused(w.out_channels(), w.in_channels(), extent);
  for (std::size_t o = 0; o < w.out_channels(); ++o) {
    for (std::size_t c = 0; c < w.in_channels(); ++c) {
      for (int k1 = 0; k1 < K; ++k1) {
        for (int k2 = 0; k2 < K; ++k2) {
          const double wk = w.kernel.at(o, c, static_cast<std::size_t>(k1),
                                        static_cast<std::size_t>(k2));
          for (int n1 = 0; n1 < s; ++n1) {
            for (int n2 = 0; n2 < s; ++n2) {
              fused.kernel.at(o, c, static_cast<std::size_t>(r * k1 + n1),
                              static_cast<std::size_t>(r * k2 + n2)) +=
                  wk * v.weights[static_cast<std::size_t>(n1 * s + n2)];
            }
          }
        }
      }
    }
  }
  return fused;
}

Tensor smoothed_dilated_conv2d_fused(const Tensor& x, const SmoothingFilter& v,
                                     const ConvWeights& w, const ConvSpec& spec) {
  check_conv_args(x, w, spec);
  const ConvWeights fused = fuse_effective_kernel(v, w, spec);
  const Shape& xs = x.shape();
  Tensor y(Shape{xs.n, w.out_channels(), xs.h, xs.w});
  kernels::conv_forward(x, fused.kernel, 1, y);

  const long H = static_cast<long>(xs.h);
  const long W = static_cast<long>(xs.w);
  const long K = spec.kernel_size;
  const long r = spec.dilation;
  const long reach = (K / 2) * r;
  auto interior = [&](long h, long ww) {
    return h >= reach && h < H - reach && ww >= reach && ww < W - reach;
  };
  for (std::size_t n = 0; n < xs.n; ++n) {
    for (std::size_t o = 0; o < w.out_channels(); ++o) {
      for (long h = 0; h < H; ++h) {
        for (long ww = 0; ww < W; ++ww) {
          if (interior(h, ww)) continue;
          double acc = 0.0;
          for (std::size_t c = 0; c < xs.c; ++c) {
            for (long k1 = 0; k1 < K; ++k1) {
              const long th = h + (k1 - K / 2) * r;
              if (th < 0 || th >= H) continue;
              for (long k2 = 0; k2 < K; ++k2) {
                const long tw = ww + (k2 - K / 2) * r;
                if (tw < 0 || tw >= W) continue;
                acc += w.kernel.at(o, c, static_cast<std::size_t>(k1),
                                   static_cast<std::size_t>(k2)) *
                       smoothed_at(x, v.weights, n, c, th, tw);
              }
            }
          }
          y.at(n, o, static_cast<std::size_t>(h), static_cast<std::size_t>(ww)) = acc;
        }
      }
    }
  }
  return y;
}

Tensor smooth_separable(const Tensor& x, const SmoothingFilter& v) {
  if (v.kind != FilterKind::none && v.kind != FilterKind::average &&
      v.kind != FilterKind::gaussian) {
    throw UnsupportedKindError("separable smoothing is not available for " +
                               std::string(to_string(v.kind)) + " filters");
  }
  check_filter(v);
  Tensor y(x.shape());
  kernels::separable_forward(x, v.profile(), y);
  return y;
}

namespace kernels {

namespace {

constexpr std::size_t kChunk = 8;

struct Tap {
  long dy;
  long dx;
};

// y[n, o] += sum_c sum_t wpack[(o * C + c) * T + t] * x[n, c](h + dy_t, w + dx_t)
//
// Every output pixel accumulates its terms in (c, t) order whichever column
// path handles it, so results do not depend on the chunking.
void correlate(const Tensor& x, std::span<const double> wpack, std::span<const Tap> taps,
               Tensor& y) {
  const Shape& xs = x.shape();
  const std::size_t H = xs.h, W = xs.w, C = xs.c, O = y.shape().c;
  const std::size_t T = taps.size();
  long reach_lo = 0, reach_hi = 0;
  for (const Tap& t : taps) {
    reach_lo = std::max(reach_lo, -t.dx);
    reach_hi = std::max(reach_hi, t.dx);
  }
  const std::size_t col_lo = std::min<std::size_t>(W, static_cast<std::size_t>(reach_lo));
  const std::size_t col_hi =
      std::max<std::size_t>(col_lo, W > static_cast<std::size_t>(reach_hi)
                                        ? W - static_cast<std::size_t>(reach_hi)
                                        : 0);
  std::vector<const double*> rows(C * T);
  for (std::size_t n = 0; n < xs.n; ++n) {
    for (std::size_t o = 0; o < O; ++o) {
      double* yp = y.plane(n, o);
      const double* wo = wpack.data() + o * C * T;
      for (std::size_t h = 0; h < H; ++h) {
        // Source row pointer per (c, t), null when the tap row is padding.
        for (std::size_t c = 0; c < C; ++c) {
          const double* xp = x.plane(n, c);
          for (std::size_t t = 0; t < T; ++t) {
            const long hh = static_cast<long>(h) + taps[t].dy;
            rows[c * T + t] = (hh < 0 || hh >= static_cast<long>(H))
                                  ? nullptr
                                  : xp + static_cast<std::size_t>(hh) * W + taps[t].dx;
          }
        }
        double* yrow = yp + h * W;
        std::size_t i = col_lo;
        for (; i + kChunk <= col_hi; i += kChunk) {
          double acc[kChunk];
          for (std::size_t j = 0; j < kChunk; ++j) acc[j] = yrow[i + j];
          for (std::size_t k = 0; k < C * T; ++k) {
            const double* src = rows[k];
            if (src == nullptr) continue;
            const double wt = wo[k];
            for (std::size_t j = 0; j < kChunk; ++j) acc[j] += wt * src[i + j];
          }
          for (std::size_t j = 0; j < kChunk; ++j) yrow[i + j] = acc[j];
        }
        auto scalar = [&](std::size_t col) {
          double acc = yrow[col];
          for (std::size_t c = 0; c < C; ++c) {
            for (std::size_t t = 0; t < T; ++t) {
              const double* src = rows[c * T + t];
              if (src == nullptr) continue;
              const long ww = static_cast<long>(col) + taps[t].dx;
              if (ww < 0 || ww >= static_cast<long>(W)) continue;
              acc += wo[c * T + t] * src[col];
            }
          }
          yrow[col] = acc;
        };
        for (; i < col_hi; ++i) scalar(i);
        for (std::size_t col = 0; col < col_lo; ++col) scalar(col);
        for (std::size_t col = col_hi; col < W; ++col) scalar(col);
      }
    }
  }
}

std::vector<Tap> conv_taps(long K, long dilation, long sign) {
  std::vector<Tap> taps;
  const long half = K / 2;
  for (long k1 = 0; k1 < K; ++k1) {
    for (long k2 = 0; k2 < K; ++k2) {
      taps.push_back({sign * (k1 - half) * dilation, sign * (k2 - half) * dilation});
    }
  }
  return taps;
}

// acc[t * kChunk + j] collects lane j of tap t over the chunked columns.
void accumulate_weight_grads(const double* yrow, std::span<const double* const> rows,
                             std::size_t lo, std::size_t hi, double* acc) {
  for (std::size_t t = 0; t < rows.size(); ++t) {
    const double* src = rows[t];
    if (src == nullptr) continue;
    double a[kChunk] = {};
    for (std::size_t i = lo; i + kChunk <= hi; i += kChunk) {
      for (std::size_t j = 0; j < kChunk; ++j) a[j] += yrow[i + j] * src[i + j];
    }
    for (std::size_t j = 0; j < kChunk; ++j) acc[t * kChunk + j] += a[j];
  }
}

}  // namespace

void conv_forward(const Tensor& x, const Tensor& w, int dilation, Tensor& y) {
  const std::vector<Tap> taps = conv_taps(static_cast<long>(w.shape().h), dilation, 1);
  correlate(x, w.data(), taps, y);
}

void conv_backward_input(const Tensor& gy, const Tensor& w, int dilation, Tensor& gx) {
  const Shape& ws = w.shape();
  const std::size_t O = ws.n, C = ws.c, T = ws.plane();
  // Transpose to (c, o, t) and flip the tap offsets.
  std::vector<double> wt(O * C * T);
  for (std::size_t o = 0; o < O; ++o) {
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t t = 0; t < T; ++t) wt[(c * O + o) * T + t] = w[(o * C + c) * T + t];
    }
  }
  const std::vector<Tap> taps = conv_taps(static_cast<long>(ws.h), dilation, -1);
  correlate(gy, wt, taps, gx);
}

void conv_backward_weights(const Tensor& x, const Tensor& gy, int dilation, Tensor& gw) {
  const Shape& xs = x.shape();
  const Shape& ws = gw.shape();
  const std::size_t H = xs.h, W = xs.w, C = xs.c, O = ws.n;
  const std::vector<Tap> taps = conv_taps(static_cast<long>(ws.h), dilation, 1);
  const std::size_t T = taps.size();
  const long reach = static_cast<long>(ws.h / 2) * dilation;
  const std::size_t col_lo = std::min<std::size_t>(W, static_cast<std::size_t>(reach));
  const std::size_t col_hi = std::max<std::size_t>(
      col_lo, W > static_cast<std::size_t>(reach) ? W - static_cast<std::size_t>(reach) : 0);
  const std::size_t chunked_hi = col_lo + (col_hi - col_lo) / kChunk * kChunk;

  std::vector<double> acc(T * kChunk);
  std::vector<double> rest(T);
  std::vector<const double*> rows(T);
  for (std::size_t o = 0; o < O; ++o) {
    for (std::size_t c = 0; c < C; ++c) {
      std::fill(acc.begin(), acc.end(), 0.0);
      std::fill(rest.begin(), rest.end(), 0.0);
      for (std::size_t n = 0; n < xs.n; ++n) {
        const double* yp = gy.plane(n, o);
        const double* xp = x.plane(n, c);
        for (std::size_t h = 0; h < H; ++h) {
          for (std::size_t t = 0; t < T; ++t) {
            const long hh = static_cast<long>(h) + taps[t].dy;
            rows[t] = (hh < 0 || hh >= static_cast<long>(H))
                          ? nullptr
                          : xp + static_cast<std::size_t>(hh) * W + taps[t].dx;
          }
          const double* yrow = yp + h * W;
          accumulate_weight_grads(yrow, rows, col_lo, chunked_hi, acc.data());
          auto scalar = [&](std::size_t col) {
            for (std::size_t t = 0; t < T; ++t) {
              if (rows[t] == nullptr) continue;
              const long ww = static_cast<long>(col) + taps[t].dx;
              if (ww < 0 || ww >= static_cast<long>(W)) continue;
              rest[t] += yrow[col] * rows[t][col];
            }
          };
          for (std::size_t col = chunked_hi; col < W; ++col) scalar(col);
          for (std::size_t col = 0; col < col_lo; ++col) scalar(col);
        }
      }
      double* g = gw.data().data() + (o * C + c) * T;
      for (std::size_t t = 0; t < T; ++t) {
        double s = rest[t];
        for (std::size_t j = 0; j < kChunk; ++j) s += acc[t * kChunk + j];
        g[t] += s;
      }
    }
  }
}

void depthwise_forward(const Tensor& x, const Tensor& v, Tensor& y) {
  const Shape& xs = x.shape();
  const std::size_t H = xs.h, W = xs.w;
  const long s = static_cast<long>(v.shape().h);
  const long half = s / 2;
  const double* vk = v.data().data();
  for (std::size_t n = 0; n < xs.n; ++n) {
    for (std::size_t c = 0; c < xs.c; ++c) {
      const double* xp = x.plane(n, c);
      double* yp = y.plane(n, c);
      for (std::size_t h = 0; h < H; ++h) {
        double* yrow = yp + h * W;
        for (long n1 = 0; n1 < s; ++n1) {
          const long hh = static_cast<long>(h) + n1 - half;
          if (hh < 0 || hh >= static_cast<long>(H)) continue;
          const double* xrow = xp + static_cast<std::size_t>(hh) * W;
          for (long n2 = 0; n2 < s; ++n2) {
            const long dx = n2 - half;
            const Range cols = valid_range(W, dx);
            const double wt = vk[n1 * s + n2];
            const double* xsr = xrow + dx;
            for (std::size_t i = cols.lo; i < cols.hi; ++i) yrow[i] += wt * xsr[i];
          }
        }
      }
    }
  }
}

void depthwise_backward_input(const Tensor& gy, const Tensor& v, Tensor& gx) {
  const Shape& gs = gy.shape();
  const std::size_t H = gs.h, W = gs.w;
  const long s = static_cast<long>(v.shape().h);
  const long half = s / 2;
  const double* vk = v.data().data();
  for (std::size_t n = 0; n < gs.n; ++n) {
    for (std::size_t c = 0; c < gs.c; ++c) {
      const double* yp = gy.plane(n, c);
      double* gp = gx.plane(n, c);
      for (std::size_t h = 0; h < H; ++h) {
        double* grow = gp + h * W;
        for (long n1 = 0; n1 < s; ++n1) {
          const long yh = static_cast<long>(h) - (n1 - half);
          if (yh < 0 || yh >= static_cast<long>(H)) continue;
          const double* yrow = yp + static_cast<std::size_t>(yh) * W;
          for (long n2 = 0; n2 < s; ++n2) {
            const long dx = -(n2 - half);
            const Range cols = valid_range(W, dx);
            const double wt = vk[n1 * s + n2];
            const double* ys = yrow + dx;
            for (std::size_t i = cols.lo; i < cols.hi; ++i) grow[i] += wt * ys[i];
          }
        }
      }
    }
  }
}

void depthwise_backward_filter(const Tensor& x, const Tensor& gy, Tensor& gv) {
  const Shape& xs = x.shape();
  const std::size_t H = xs.h, W = xs.w;
  const long s = static_cast<long>(gv.shape().h);
  const long half = s / 2;
  std::vector<double> acc(static_cast<std::size_t>(s * s) * W, 0.0);
  for (std::size_t n = 0; n < xs.n; ++n) {
    for (std::size_t c = 0; c < xs.c; ++c) {
      const double* xp = x.plane(n, c);
      const double* yp = gy.plane(n, c);
      for (std::size_t h = 0; h < H; ++h) {
        const double* yrow = yp + h * W;
        for (long n1 = 0; n1 < s; ++n1) {
          const long hh = static_cast<long>(h) + n1 - half;
          if (hh < 0 || hh >= static_cast<long>(H)) continue;
          const double* xrow = xp + static_cast<std::size_t>(hh) * W;
          for (long n2 = 0; n2 < s; ++n2) {
            const long dx = n2 - half;
            const Range cols = valid_range(W, dx);
            double* a = acc.data() + static_cast<std::size_t>(n1 * s + n2) * W;
            const double* xsr = xrow + dx;
            for (std::size_t i = cols.lo; i < cols.hi; ++i) a[i] += yrow[i] * xsr[i];
          }
        }
      }
    }
  }
  for (long k = 0; k < s * s; ++k) {
    const double* a = acc.data() + static_cast<std::size_t>(k) * W;
    double sum = 0.0;
    for (std::size_t i = 0; i < W; ++i) sum += a[i];
    gv[static_cast<std::size_t>(k)] += sum;
  }
}

void separable_forward(const Tensor& x, const std::vector<double>& p, Tensor& y) {
  const Shape& xs = x.shape();
  const std::size_t H = xs.h, W = xs.w;
  const long s = static_cast<long>(p.size());
  const long half = s / 2;
  std::vector<double> tmp(H * W);
  for (std::size_t n = 0; n < xs.n; ++n) {
    for (std::size_t c = 0; c < xs.c; ++c) {
      const double* xp = x.plane(n, c);
      std::fill(tmp.begin(), tmp.end(), 0.0);
      for (std::size_t h = 0; h < H; ++h) {
        const double* xrow = xp + h * W;
        double* trow = tmp.data() + h * W;
        for (long j = 0; j < s; ++j) {
          const long dx = j - half;
          const Range cols = valid_range(W, dx);
          const double wt = p[static_cast<std::size_t>(j)];
          const double* xsr = xrow + dx;
          for (std::size_t i = cols.lo; i < cols.hi; ++i) trow[i] += wt * xsr[i];
        }
      }
      double* yp = y.plane(n, c);
      for (std::size_t h = 0; h < H; ++h) {
        double* yrow = yp + h * W;
        for (long j = 0; j < s; ++j) {
          const long hh = static_cast<long>(h) + j - half;
          if (hh < 0 || hh >= static_cast<long>(H)) continue;
          const double* trow = tmp.data() + static_cast<std::size_t>(hh) * W;
          const double wt = p[static_cast<std::size_t>(j)];
          for (std::size_t i = 0; i < W; ++i) yrow[i] += wt * trow[i];
        }
      }
    }
  }
}

void separable_backward_input(const Tensor& gy, const std::vector<double>& p,
                              Tensor& gx) {
  const Shape& gs = gy.shape();
  const std::size_t H = gs.h, W = gs.w;
  const long s = static_cast<long>(p.size());
  const long half = s / 2;
  std::vector<double> tmp(H * W);
  for (std::size_t n = 0; n < gs.n; ++n) {
    for (std::size_t c = 0; c < gs.c; ++c) {
      const double* yp = gy.plane(n, c);
      std::fill(tmp.begin(), tmp.end(), 0.0);
      // Adjoint of the column pass.
      for (std::size_t h = 0; h < H; ++h) {
        double* trow = tmp.data() + h * W;
        for (long j = 0; j < s; ++j) {
          const long yh = static_cast<long>(h) - (j - half);
          if (yh < 0 || yh >= static_cast<long>(H)) continue;
          const double* yrow = yp + static_cast<std::size_t>(yh) * W;
          const double wt = p[static_cast<std::size_t>(j)];
          for (std::size_t i = 0; i < W; ++i) trow[i] += wt * yrow[i];
        }
      }
      // Adjoint of the row pass.
      double* gp = gx.plane(n, c);
      for (std::size_t h = 0; h < H; ++h) {
        const double* trow = tmp.data() + h * W;
        double* grow = gp + h * W;
        for (long j = 0; j < s; ++j) {
          const long dx = -(j - half);
          const Range cols = valid_range(W, dx);
          const double wt = p[static_cast<std::size_t>(j)];
          const double* ts = trow + dx;
          for (std::size_t i = cols.lo; i < cols.hi; ++i) grow[i] += wt * ts[i];
        }
      }
    }
  }
}

}  // namespace kernels

}  // namespace sdconv
