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

#include "sdconv/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "sdconv/error.hpp"

namespace sdconv::ad {

namespace {

const Shape kScalar{1, 1, 1, 1};

Tensor scalar_tensor(double v) { return Tensor(kScalar, {v}); }

}  // namespace

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::parameter(Tensor value, std::string name) {
  for (const Node& n : nodes_) {
    if (n.is_parameter && n.name == name) {
      throw ParameterError("duplicate parameter name '" + name + "'");
    }
  }
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  n.is_parameter = true;
  n.name = std::move(name);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  for (Var in : inputs) {
    if (in.id >= nodes_.size()) throw ParameterError("op input is not on this tape");
    n.requires_grad = n.requires_grad || nodes_[in.id].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id);
  return n.has_grad ? n.grad : zeros_like(n.value);
}

Tensor& Tape::grad_buffer(Var v) {
  Node& n = nodes_.at(v.id);
  if (!n.has_grad) {
    n.grad = zeros_like(n.value);
    n.has_grad = true;
  }
  return n.grad;
}

std::vector<Var> Tape::parameters() const {
  std::vector<Var> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].is_parameter) out.push_back(Var{i});
  }
  return out;
}

void Tape::zero_grad() {
  for (Node& n : nodes_) {
    n.grad = Tensor();
    n.has_grad = false;
  }
}

std::map<std::string, Tensor> backward(Tape& tape, Var loss) {
  if (tape.value(loss).shape() != kScalar) {
    throw ParameterError("backward: loss must be a (1,1,1,1) scalar, got " +
                         tape.value(loss).shape().str());
  }
  tape.grad_buffer(loss)[0] += 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Tape::Node& n = tape.nodes_[i];
    if (!n.has_grad || !n.backward) continue;
    // Rules only touch earlier nodes, so this reference stays valid.
    n.backward(tape, n.grad);
  }
  std::map<std::string, Tensor> grads;
  for (Var p : tape.parameters()) grads.emplace(tape.name(p), tape.grad(p));
  return grads;
}

Var add(Tape& t, Var a, Var b) {
  Tensor v = sdconv::add(t.value(a), t.value(b));
  return t.record(std::move(v), {a, b}, [a, b](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(a)) axpy(1.0, g, tp.grad_buffer(a));
    if (tp.requires_grad(b)) axpy(1.0, g, tp.grad_buffer(b));
  });
}

Var sub(Tape& t, Var a, Var b) {
  Tensor v = sdconv::sub(t.value(a), t.value(b));
  return t.record(std::move(v), {a, b}, [a, b](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(a)) axpy(1.0, g, tp.grad_buffer(a));
    if (tp.requires_grad(b)) axpy(-1.0, g, tp.grad_buffer(b));
  });
}

Var mul(Tape& t, Var a, Var b) {
  Tensor v = sdconv::mul(t.value(a), t.value(b));
  return t.record(std::move(v), {a, b}, [a, b](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(a)) {
      Tensor& ga = tp.grad_buffer(a);
      const Tensor& vb = tp.value(b);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * vb[i];
    }
    if (tp.requires_grad(b)) {
      Tensor& gb = tp.grad_buffer(b);
      const Tensor& va = tp.value(a);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[i] * va[i];
    }
  });
}

Var scale(Tape& t, Var a, double s) {
  Tensor v = sdconv::scale(t.value(a), s);
  return t.record(std::move(v), {a}, [a, s](Tape& tp, const Tensor& g) {
    axpy(s, g, tp.grad_buffer(a));
  });
}

Var sum(Tape& t, Var a) {
  return t.record(scalar_tensor(t.value(a).sum()), {a},
                  [a](Tape& tp, const Tensor& g) {
                    Tensor& ga = tp.grad_buffer(a);
                    for (double& v : ga.data()) v += g[0];
                  });
}

Var sum_squares(Tape& t, Var a) {
  const Tensor& x = t.value(a);
  return t.record(scalar_tensor(dot(x, x)), {a}, [a](Tape& tp, const Tensor& g) {
    axpy(2.0 * g[0], tp.value(a), tp.grad_buffer(a));
  });
}

Var relu(Tape& t, Var a) {
  Tensor v = t.value(a);
  for (double& e : v.data()) e = e > 0.0 ? e : 0.0;
  return t.record(std::move(v), {a}, [a](Tape& tp, const Tensor& g) {
    const Tensor& x = tp.value(a);
    Tensor& ga = tp.grad_buffer(a);
    for (std::size_t i = 0; i < ga.size(); ++i) {
      if (x[i] > 0.0) ga[i] += g[i];
    }
  });
}

Var add_channel_bias(Tape& t, Var x, Var b) {
  const Tensor& xv = t.value(x);
  const Tensor& bv = t.value(b);
  const Shape& s = xv.shape();
  if (bv.shape() != Shape{1, s.c, 1, 1}) {
    throw ParameterError("bias shape " + bv.shape().str() + " does not match " +
                         std::to_string(s.c) + " channels");
  }
  Tensor v = xv;
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t c = 0; c < s.c; ++c) {
      double* p = v.plane(n, c);
      for (std::size_t i = 0; i < s.plane(); ++i) p[i] += bv[c];
    }
  }
  return t.record(std::move(v), {x, b}, [x, b](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(x)) axpy(1.0, g, tp.grad_buffer(x));
    if (tp.requires_grad(b)) {
      Tensor& gb = tp.grad_buffer(b);
      const Shape& s = g.shape();
      for (std::size_t n = 0; n < s.n; ++n) {
        for (std::size_t c = 0; c < s.c; ++c) {
          const double* p = g.plane(n, c);
          double acc = 0.0;
          for (std::size_t i = 0; i < s.plane(); ++i) acc += p[i];
          gb[c] += acc;
        }
      }
    }
  });
}

Var dilated_conv2d(Tape& t, Var x, Var w, const ConvSpec& spec) {
  Tensor y = sdconv::dilated_conv2d(t.value(x), ConvWeights(t.value(w)), spec);
  const int r = spec.dilation;
  return t.record(std::move(y), {x, w}, [x, w, r](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(x)) {
      kernels::conv_backward_input(g, tp.value(w), r, tp.grad_buffer(x));
    }
    if (tp.requires_grad(w)) {
      kernels::conv_backward_weights(tp.value(x), g, r, tp.grad_buffer(w));
    }
  });
}

Var smooth(Tape& t, Var x, Var kernel) {
  const Tensor& k = t.value(kernel);
  const Shape& ks = k.shape();
  if (ks.n != 1 || ks.c != 1 || ks.h != ks.w || ks.h == 0) {
    throw ParameterError("smoothing kernel must be (1,1,s,s), got " + ks.str());
  }
  Tensor y(t.value(x).shape());
  kernels::depthwise_forward(t.value(x), k, y);
  return t.record(std::move(y), {x, kernel}, [x, kernel](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(x)) {
      kernels::depthwise_backward_input(g, tp.value(kernel), tp.grad_buffer(x));
    }
    if (tp.requires_grad(kernel)) {
      kernels::depthwise_backward_filter(tp.value(x), g, tp.grad_buffer(kernel));
    }
  });
}

Var smooth_fixed(Tape& t, Var x, const SmoothingFilter& v, bool separable) {
  std::vector<double> profile = separable ? v.profile() : std::vector<double>{};
  Tensor y(t.value(x).shape());
  if (!profile.empty()) {
    kernels::separable_forward(t.value(x), profile, y);
    return t.record(std::move(y), {x},
                    [x, p = std::move(profile)](Tape& tp, const Tensor& g) {
                      kernels::separable_backward_input(g, p, tp.grad_buffer(x));
                    });
  }
  kernels::depthwise_forward(t.value(x), v.weights, y);
  return t.record(std::move(y), {x}, [x, k = v.weights](Tape& tp, const Tensor& g) {
    kernels::depthwise_backward_input(g, k, tp.grad_buffer(x));
  });
}

Var aggregate_kernel(Tape& t, Var logits, Var learned, const Tensor& average,
                     const Tensor& gaussian, const Tensor& delta) {
  const Tensor& lv = t.value(logits);
  const Tensor& learned_v = t.value(learned);
  if (lv.size() != 4) throw ParameterError("aggregation needs exactly 4 logits");
  if (average.shape() != learned_v.shape() || gaussian.shape() != learned_v.shape() ||
      delta.shape() != learned_v.shape()) {
    throw ParameterError("aggregated member kernels must share one shape");
  }
  const double m = std::max({lv[0], lv[1], lv[2], lv[3]});
  std::array<double, 4> alpha{};
  double z = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    alpha[i] = std::exp(lv[i] - m);
    z += alpha[i];
  }
  for (double& a : alpha) a /= z;

  Tensor k(learned_v.shape());
  for (std::size_t i = 0; i < k.size(); ++i) {
    k[i] = alpha[0] * average[i] + alpha[1] * gaussian[i] + alpha[2] * learned_v[i] +
           alpha[3] * delta[i];
  }
  return t.record(
      std::move(k), {logits, learned},
      [logits, learned, alpha, average, gaussian, delta](Tape& tp, const Tensor& g) {
        if (tp.requires_grad(logits)) {
          const std::array<double, 4> d_alpha{dot(g, average), dot(g, gaussian),
                                              dot(g, tp.value(learned)), dot(g, delta)};
          double mean = 0.0;
          for (std::size_t i = 0; i < 4; ++i) mean += alpha[i] * d_alpha[i];
          Tensor& gl = tp.grad_buffer(logits);
          for (std::size_t i = 0; i < 4; ++i) gl[i] += alpha[i] * (d_alpha[i] - mean);
        }
        if (tp.requires_grad(learned)) axpy(alpha[2], g, tp.grad_buffer(learned));
      });
}

Var softmax_cross_entropy(Tape& t, Var scores, std::span<const int> labels) {
  const Tensor& sv = t.value(scores);
  const Shape& s = sv.shape();
  const std::size_t pixels = s.n * s.plane();
  if (labels.size() != pixels) {
    throw ParameterError("label count " + std::to_string(labels.size()) +
                         " does not match " + std::to_string(pixels) + " pixels");
  }
  Tensor prob(s);
  double loss = 0.0;
  for (std::size_t n = 0; n < s.n; ++n) {
    for (std::size_t i = 0; i < s.plane(); ++i) {
      const int label = labels[n * s.plane() + i];
      if (label < 0 || static_cast<std::size_t>(label) >= s.c) {
        throw ParameterError("label " + std::to_string(label) + " out of range");
      }
      double m = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < s.c; ++c) m = std::max(m, sv.plane(n, c)[i]);
      double z = 0.0;
      for (std::size_t c = 0; c < s.c; ++c) {
        const double e = std::exp(sv.plane(n, c)[i] - m);
        prob.plane(n, c)[i] = e;
        z += e;
      }
      for (std::size_t c = 0; c < s.c; ++c) prob.plane(n, c)[i] /= z;
      loss -= sv.plane(n, static_cast<std::size_t>(label))[i] - m - std::log(z);
    }
  }
  const double inv = pixels == 0 ? 0.0 : 1.0 / static_cast<double>(pixels);
  std::vector<int> lab(labels.begin(), labels.end());
  return t.record(
      scalar_tensor(loss * inv), {scores},
      [scores, inv, p = std::move(prob), lab = std::move(lab)](Tape& tp, const Tensor& g) {
        Tensor& gs = tp.grad_buffer(scores);
        const Shape& s = p.shape();
        const double coef = g[0] * inv;
        for (std::size_t n = 0; n < s.n; ++n) {
          for (std::size_t c = 0; c < s.c; ++c) {
            const double* pp = p.plane(n, c);
            double* gp = gs.plane(n, c);
            const int* lp = lab.data() + n * s.plane();
            for (std::size_t i = 0; i < s.plane(); ++i) {
              const double target = lp[i] == static_cast<int>(c) ? 1.0 : 0.0;
              gp[i] += coef * (pp[i] - target);
            }
          }
        }
      });
}

Tensor finite_difference_gradient(const std::function<double(const Tensor&)>& f,
                                  const Tensor& x, double h) {
  Tensor g(x.shape());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double fp = f(probe);
    probe[i] = orig - h;
    const double fm = f(probe);
    probe[i] = orig;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

double max_relative_error(const Tensor& analytic, const Tensor& numeric) {
  if (analytic.shape() != numeric.shape()) {
    throw ParameterError("gradient shapes differ");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double a = analytic[i];
    const double f = numeric[i];
    const double denom = std::max({std::abs(a), std::abs(f), 1e-8});
    worst = std::max(worst, std::abs(a - f) / denom);
  }
  return worst;
}

namespace {

double evaluate(const ScalarModel& model, const std::vector<NamedTensor>& params) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const NamedTensor& p : params) vars.push_back(tape.constant(p.value));
  Var loss = model(tape, vars);
  return tape.value(loss)[0];
}

}  // namespace

GradReport check_gradients(const ScalarModel& model,
                           const std::vector<NamedTensor>& params, double tolerance,
                           double h) {
  GradReport report;
  report.tolerance = tolerance;
  report.passed = true;

  Tape tape;
  std::vector<Var> vars;
  for (const NamedTensor& p : params) vars.push_back(tape.parameter(p.value, p.name));
  const Var loss = model(tape, vars);
  const std::map<std::string, Tensor> analytic = backward(tape, loss);

  std::vector<NamedTensor> probe = params;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto f = [&](const Tensor& value) {
      probe[k].value = value;
      return evaluate(model, probe);
    };
    Tensor numeric = finite_difference_gradient(f, params[k].value, h);
    probe[k].value = params[k].value;

    GradReport::Entry e;
    e.name = params[k].name;
    e.max_rel_error = max_relative_error(analytic.at(params[k].name), numeric);
    e.passed = e.max_rel_error <= tolerance;
    report.passed = report.passed && e.passed;
    report.entries.push_back(std::move(e));
  }
  return report;
}

}  // namespace sdconv::ad
