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

#include <array>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sdconv/conv.hpp"
#include "sdconv/tensor.hpp"

namespace sdconv::ad {

/// Handle to a value recorded on a Tape.
struct Var {
  static constexpr std::size_t kInvalid = std::numeric_limits<std::size_t>::max();
  std::size_t id = kInvalid;

  bool valid() const { return id != kInvalid; }
};

class Tape;

/// Backward rule of one recorded op. Receives the gradient of the op's output
/// and accumulates into its inputs through Tape::grad_buffer.
using BackwardFn = std::function<void(Tape& tape, const Tensor& out_grad)>;

/// Linear record of primitive applications for reverse-mode differentiation.
///
/// Ops append a node holding their output value and a backward closure.
/// Nodes are stored in recording order, which is a topological order, so
/// backward() simply walks the tape in reverse.
class Tape {
 public:
  Var constant(Tensor value);
  /// Trainable leaf. Names must be unique within a tape.
  Var parameter(Tensor value, std::string name);
  /// Records a custom op. The node needs a gradient iff any input does.
  Var record(Tensor value, std::vector<Var> inputs, BackwardFn backward);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  const std::string& name(Var v) const { return nodes_.at(v.id).name; }

  /// Gradient accumulated so far; zeros when nothing flowed into v.
  Tensor grad(Var v) const;
  /// Mutable accumulator, allocated as zeros on first use.
  Tensor& grad_buffer(Var v);

  std::size_t size() const { return nodes_.size(); }
  std::vector<Var> parameters() const;

  /// Drops every accumulated gradient.
  void zero_grad();

 private:
  friend std::map<std::string, Tensor> backward(Tape& tape, Var loss);

  struct Node {
    Tensor value;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    bool is_parameter = false;
    std::string name;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
};

/// Runs every backward rule in reverse recording order, seeded with
/// d loss / d loss = 1. Returns the gradient of each named parameter;
/// parameters with no path to the loss map to zeros. The loss must have shape
/// (1,1,1,1).
std::map<std::string, Tensor> backward(Tape& tape, Var loss);

// ---------------------------------------------------------------------------
// Differentiable ops
// ---------------------------------------------------------------------------

Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double s);
/// Sum of all elements as a (1,1,1,1) tensor.
Var sum(Tape& t, Var a);
/// Sum of squares as a (1,1,1,1) tensor.
Var sum_squares(Tape& t, Var a);
Var relu(Tape& t, Var a);
/// x + b with b of shape (1, C, 1, 1) broadcast over batch and space.
Var add_channel_bias(Tape& t, Var x, Var b);

Var dilated_conv2d(Tape& t, Var x, Var w, const ConvSpec& spec);
/// Depthwise smoothing with a (1,1,s,s) kernel held on the tape.
Var smooth(Tape& t, Var x, Var kernel);
/// Depthwise smoothing with a constant filter. Uses the separable fast path
/// when `separable` is set and the filter kind factors.
Var smooth_fixed(Tape& t, Var x, const SmoothingFilter& v, bool separable);

/// Convex combination sum_i softmax(logits)_i * member_i, where members are
/// (average, gaussian, learned, none). `logits` has 4 elements, `learned` is a
/// (1,1,s,s) kernel; the remaining members are constants.
Var aggregate_kernel(Tape& t, Var logits, Var learned, const Tensor& average,
                     const Tensor& gaussian, const Tensor& delta);

/// Mean softmax cross-entropy over every pixel. `scores` is (N, C, H, W);
/// labels hold N*H*W class ids in [0, C).
Var softmax_cross_entropy(Tape& t, Var scores, std::span<const int> labels);

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

/// Central differences (f(x + h e_i) - f(x - h e_i)) / (2h) for every i.
Tensor finite_difference_gradient(const std::function<double(const Tensor&)>& f,
                                  const Tensor& x, double h = 1e-5);

/// |a - f| / max(|a|, |f|, 1e-8), reduced by max over elements.
double max_relative_error(const Tensor& analytic, const Tensor& numeric);

struct NamedTensor {
  std::string name;
  Tensor value;
};

/// Builds a scalar loss on the tape from the parameter handles (same order as
/// the NamedTensor list handed to check_gradients).
using ScalarModel = std::function<Var(Tape& tape, const std::vector<Var>& params)>;

struct GradReport {
  struct Entry {
    std::string name;
    double max_rel_error = 0.0;
    bool passed = false;
  };
  std::vector<Entry> entries;
  double tolerance = 0.0;
  bool passed = false;
};

/// Compares backward() against finite differences for every parameter.
/// Failures are reported, never thrown.
GradReport check_gradients(const ScalarModel& model,
                           const std::vector<NamedTensor>& params, double tolerance,
                           double h = 1e-5);

}  // namespace sdconv::ad
