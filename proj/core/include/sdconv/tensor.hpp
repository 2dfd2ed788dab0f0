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

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace sdconv {

class Rng;

/// Extents of a dense (batch, channel, height, width) tensor.
struct Shape {
  std::size_t n = 0;
  std::size_t c = 0;
  std::size_t h = 0;
  std::size_t w = 0;

  std::size_t numel() const { return n * c * h * w; }
  std::size_t plane() const { return h * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

/// Dense row-major NCHW array of doubles.
///
/// Plain value type: copies are deep, moves are cheap. Element (n, c, h, w)
/// lives at n*(C*H*W) + c*(H*W) + h*W + w.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> data);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t index(std::size_t n, std::size_t c, std::size_t h,
                    std::size_t w) const {
    return ((n * shape_.c + c) * shape_.h + h) * shape_.w + w;
  }

  double& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return data_[index(n, c, h, w)];
  }
  double at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return data_[index(n, c, h, w)];
  }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  // Pointer to the H*W plane of (n, c).
  double* plane(std::size_t n, std::size_t c) {
    return data_.data() + (n * shape_.c + c) * shape_.plane();
  }
  const double* plane(std::size_t n, std::size_t c) const {
    return data_.data() + (n * shape_.c + c) * shape_.plane();
  }

  void fill(double value);
  double sum() const;
  bool all_finite() const;

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

Tensor zeros(Shape shape);
Tensor zeros_like(const Tensor& t);
Tensor full(Shape shape, double value);

/// Uniform samples in [lo, hi). Throws ParameterError when lo >= hi.
Tensor random_uniform(Shape shape, double lo, double hi, Rng& rng);

enum class ElementwiseOp { add, sub, mul, scale };

/// Pointwise a (op) b; shapes must match. `scale` multiplies pointwise.
Tensor elementwise(ElementwiseOp op, const Tensor& a, const Tensor& b);
/// Pointwise a (op) s for a scalar s.
Tensor elementwise(ElementwiseOp op, const Tensor& a, double s);

inline Tensor add(const Tensor& a, const Tensor& b) {
  return elementwise(ElementwiseOp::add, a, b);
}
inline Tensor sub(const Tensor& a, const Tensor& b) {
  return elementwise(ElementwiseOp::sub, a, b);
}
inline Tensor mul(const Tensor& a, const Tensor& b) {
  return elementwise(ElementwiseOp::mul, a, b);
}
inline Tensor scale(const Tensor& a, double s) {
  return elementwise(ElementwiseOp::scale, a, s);
}

// In-place a += s * b.
void axpy(double s, const Tensor& b, Tensor& a);

double dot(const Tensor& a, const Tensor& b);
double max_abs_diff(const Tensor& a, const Tensor& b);

// Binary blob: "SDTENSR1", four little-endian u64 extents, little-endian
// IEEE doubles.
void write_tensor(std::ostream& os, const Tensor& t);
Tensor read_tensor(std::istream& is);
void save_tensor(const std::string& path, const Tensor& t);
Tensor load_tensor(const std::string& path);

}  // namespace sdconv
