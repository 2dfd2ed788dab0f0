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

#include "sdconv/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "sdconv/error.hpp"
#include "sdconv/rng.hpp"

namespace sdconv {

namespace {

constexpr char kMagic[8] = {'S', 'D', 'T', 'E', 'N', 'S', 'R', '1'};

void put_u64(std::ostream& os, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
  os.write(bytes, 8);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char bytes[8];
  if (!is.read(reinterpret_cast<char*>(bytes), 8)) {
    throw IoError("truncated tensor blob");
  }
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ParameterError(std::string(op) + ": shape mismatch " + a.shape().str() +
                         " vs " + b.shape().str());
  }
}

}  // namespace

std::string Shape::str() const {
  return "(" + std::to_string(n) + "," + std::to_string(c) + "," +
         std::to_string(h) + "," + std::to_string(w) + ")";
}

Tensor::Tensor(Shape shape) : shape_(shape), data_(shape.numel(), 0.0) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.numel()) {
    throw ParameterError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_.str());
  }
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

double Tensor::sum() const {
  double s = 0.0;
  for (double v : data_) s += v;
  return s;
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Tensor zeros(Shape shape) { return Tensor(shape); }

Tensor zeros_like(const Tensor& t) { return Tensor(t.shape()); }

Tensor full(Shape shape, double value) {
  Tensor t(shape);
  t.fill(value);
  return t;
}

Tensor random_uniform(Shape shape, double lo, double hi, Rng& rng) {
  if (!(lo < hi)) {
    throw ParameterError("random_uniform: require lo < hi");
  }
  Tensor t(shape);
  for (double& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

Tensor elementwise(ElementwiseOp op, const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "elementwise");
  Tensor out(a.shape());
  auto x = a.data();
  auto y = b.data();
  auto z = out.data();
  switch (op) {
    case ElementwiseOp::add:
      for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] + y[i];
      break;
    case ElementwiseOp::sub:
      for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] - y[i];
      break;
    case ElementwiseOp::mul:
    case ElementwiseOp::scale:
      for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] * y[i];
      break;
  }
  return out;
}

Tensor elementwise(ElementwiseOp op, const Tensor& a, double s) {
  Tensor out(a.shape());
  auto x = a.data();
  auto z = out.data();
  switch (op) {
    case ElementwiseOp::add:
      for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] + s;
      break;
    case ElementwiseOp::sub:
      for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] - s;
      break;
    case ElementwiseOp::mul:
    case ElementwiseOp::scale:
      for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] * s;
      break;
  }
  return out;
}

void axpy(double s, const Tensor& b, Tensor& a) {
  check_same_shape(a, b, "axpy");
  auto x = b.data();
  auto y = a.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += s * x[i];
}

double dot(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void write_tensor(std::ostream& os, const Tensor& t) {
  os.write(kMagic, sizeof(kMagic));
  const Shape& s = t.shape();
  put_u64(os, s.n);
  put_u64(os, s.c);
  put_u64(os, s.h);
  put_u64(os, s.w);
  for (double v : t.data()) put_u64(os, std::bit_cast<std::uint64_t>(v));
  if (!os) throw IoError("failed to write tensor blob");
}

Tensor read_tensor(std::istream& is) {
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw IoError("not a tensor blob (bad magic)");
  }
  Shape s;
  s.n = get_u64(is);
  s.c = get_u64(is);
  s.h = get_u64(is);
  s.w = get_u64(is);
  Tensor t(s);
  for (double& v : t.data()) v = std::bit_cast<double>(get_u64(is));
  return t;
}

void save_tensor(const std::string& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  write_tensor(os, t);
}

Tensor load_tensor(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "' for reading");
  return read_tensor(is);
}

}  // namespace sdconv
