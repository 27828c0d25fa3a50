//
// Copyright 2026 The memlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "memlab/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "memlab/errors.hpp"
#include "memlab/kernels.hpp"
#include "memlab/losses.hpp"

namespace memlab {

const Tensor& Var::value() const {
  if (tape_ == nullptr) throw UsageError("value() of an unbound Var");
  return tape_->value(*this);
}

Var Tape::Append(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::CheckOwned(Var v) const {
  if (v.tape_ != this || v.id_ >= nodes_.size()) {
    throw UsageError("variable does not belong to this tape");
  }
}

Var Tape::Constant(Tensor value) {
  Node node;
  node.value = std::move(value);
  return Append(std::move(node));
}

Var Tape::Input(Tensor value) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = true;
  return Append(std::move(node));
}

Var Tape::Parameter(Tensor& parameter) {
  Node node;
  node.value = Tensor(parameter.shape(),
                      {parameter.values().begin(), parameter.values().end()});
  node.bound = &parameter;
  node.requires_grad = true;
  return Append(std::move(node));
}

Var Tape::Record(Tensor value, std::initializer_list<Var> inputs,
                 BackwardFn fn) {
  Node node;
  node.value = std::move(value);
  for (Var in : inputs) {
    CheckOwned(in);
    node.requires_grad = node.requires_grad || nodes_[in.id_].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(fn);
  return Append(std::move(node));
}

const Tensor& Tape::value(Var v) const {
  CheckOwned(v);
  return nodes_[v.id_].value;
}

std::span<const double> Tape::grad(Var v) const {
  CheckOwned(v);
  return nodes_[v.id_].grad;
}

std::span<double> Tape::MutableGrad(std::size_t id) {
  Node& node = nodes_[id];
  if (node.grad.empty()) node.grad.assign(node.value.size(), 0.0);
  return node.grad;
}

void Tape::Backward(Var loss) {
  if (loss.tape_ != this || loss.id_ >= nodes_.size()) {
    throw UsageError("loss is not connected to this tape");
  }
  if (nodes_[loss.id_].value.size() != 1) {
    throw UsageError("backward needs a single-element loss, got shape " +
                     nodes_[loss.id_].value.ShapeString());
  }
  for (Node& node : nodes_) node.grad.clear();
  if (nodes_[loss.id_].requires_grad) {
    MutableGrad(loss.id_)[0] = 1.0;
    for (std::size_t id = loss.id_ + 1; id-- > 0;) {
      Node& node = nodes_[id];
      if (!node.requires_grad || node.grad.empty() || !node.backward) continue;
      node.backward(*this, id);
    }
  }
  for (Node& node : nodes_) {
    if (node.bound != nullptr) node.bound->zero_grad();
  }
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    Node& node = nodes_[id];
    if (node.bound == nullptr || node.grad.empty()) continue;
    auto dst = node.bound->grad();
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += node.grad[j];
  }
}

namespace {

Tape& SameTape(std::initializer_list<Var> vars) {
  Tape* tape = vars.begin()->tape();
  for (Var v : vars) {
    if (v.tape() == nullptr || v.tape() != tape) {
      throw UsageError("operands live on different tapes");
    }
  }
  return *tape;
}

}  // namespace

Var Linear(Var x, Var weight, Var bias) {
  Tape& tape = SameTape({x, weight, bias});
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  const Tensor& bv = bias.value();
  if (xv.rank() != 2 || wv.rank() != 2 || xv.cols() != wv.cols() ||
      bv.size() != wv.rows()) {
    throw InputError(fmt::format("linear: input {} incompatible with weight {}"
                                 " and bias {}",
                                 xv.ShapeString(), wv.ShapeString(),
                                 bv.ShapeString()));
  }
  const std::size_t n = xv.rows(), d = xv.cols(), k = wv.rows();
  Tensor out({n, k});
  kernels::LinearForward(xv.data(), wv.data(), bv.data(), n, d, k, out.data());
  const std::size_t xi = x.id(), wi = weight.id(), bi = bias.id();
  return tape.Record(
      std::move(out), {x, weight, bias},
      [xi, wi, bi, n, d, k](Tape& t, std::size_t self) {
        const double* dy = t.MutableGrad(self).data();
        if (t.RequiresGrad(xi)) {
          kernels::LinearBackwardInput(dy, t.ValueAt(wi).data(), n, d, k,
                                       t.MutableGrad(xi).data());
        }
        if (t.RequiresGrad(wi) || t.RequiresGrad(bi)) {
          // Both slots are written by one kernel call.
          kernels::LinearBackwardParams(dy, t.ValueAt(xi).data(), n, d, k,
                                        t.MutableGrad(wi).data(),
                                        t.MutableGrad(bi).data());
        }
      });
}

Var Relu(Var x) {
  Tape& tape = SameTape({x});
  Tensor out = x.value();
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  const std::size_t xi = x.id();
  return tape.Record(std::move(out), {x}, [xi](Tape& t, std::size_t self) {
    const auto dy = t.MutableGrad(self);
    const auto& in = t.ValueAt(xi);
    auto dx = t.MutableGrad(xi);
    for (std::size_t j = 0; j < dx.size(); ++j) {
      if (in[j] > 0.0) dx[j] += dy[j];
    }
  });
}

Var SoftmaxCrossEntropy(Var logits, std::span<const int> labels) {
  Tape& tape = SameTape({logits});
  const Tensor& lv = logits.value();
  BatchLosses losses = SoftmaxCrossEntropy(lv, labels);
  Tensor probs = Softmax(lv);
  std::vector<int> targets(labels.begin(), labels.end());
  const std::size_t li = logits.id();
  return tape.Record(
      Tensor::Vector(std::move(losses.per_sample)), {logits},
      [li, probs = std::move(probs), targets = std::move(targets)](
          Tape& t, std::size_t self) {
        const auto dy = t.MutableGrad(self);
        auto dl = t.MutableGrad(li);
        const std::size_t k = probs.cols();
        for (std::size_t i = 0; i < probs.rows(); ++i) {
          const double g = dy[i];
          for (std::size_t c = 0; c < k; ++c) {
            const double onehot =
                static_cast<std::size_t>(targets[i]) == c ? 1.0 : 0.0;
            dl[i * k + c] += g * (probs.at(i, c) - onehot);
          }
        }
      });
}

Var KlDivergence(Var p_logits, Var q_logits) {
  Tape& tape = SameTape({p_logits, q_logits});
  const Tensor& pv = p_logits.value();
  const Tensor& qv = q_logits.value();
  BatchLosses losses = KlDivergence(pv, qv);
  Tensor p = Softmax(pv);
  Tensor log_ratio = LogSoftmax(pv);
  {
    const Tensor log_q = LogSoftmax(qv);
    for (std::size_t j = 0; j < log_ratio.size(); ++j) {
      log_ratio[j] -= log_q[j];
    }
  }
  Tensor q = Softmax(qv);
  std::vector<double> kl = losses.per_sample;
  const std::size_t pi = p_logits.id(), qi = q_logits.id();
  return tape.Record(
      Tensor::Vector(std::move(losses.per_sample)), {p_logits, q_logits},
      [pi, qi, p = std::move(p), q = std::move(q),
       log_ratio = std::move(log_ratio),
       kl = std::move(kl)](Tape& t, std::size_t self) {
        const auto dy = t.MutableGrad(self);
        const std::size_t k = p.cols();
        if (t.RequiresGrad(pi)) {
          auto dp = t.MutableGrad(pi);
          for (std::size_t i = 0; i < p.rows(); ++i) {
            for (std::size_t c = 0; c < k; ++c) {
              dp[i * k + c] +=
                  dy[i] * p.at(i, c) * (log_ratio.at(i, c) - kl[i]);
            }
          }
        }
        if (t.RequiresGrad(qi)) {
          auto dq = t.MutableGrad(qi);
          for (std::size_t i = 0; i < p.rows(); ++i) {
            for (std::size_t c = 0; c < k; ++c) {
              dq[i * k + c] += dy[i] * (q.at(i, c) - p.at(i, c));
            }
          }
        }
      });
}

Var Mean(Var v) {
  Tape& tape = SameTape({v});
  const auto values = v.value().values();
  double acc = 0.0;
  for (double x : values) acc += x;
  const double n = static_cast<double>(values.size());
  const std::size_t vi = v.id();
  return tape.Record(Tensor::Scalar(acc / n), {v},
                     [vi, n](Tape& t, std::size_t self) {
                       const double g = t.MutableGrad(self)[0] / n;
                       for (double& d : t.MutableGrad(vi)) d += g;
                     });
}

Var Sum(Var v) {
  Tape& tape = SameTape({v});
  double acc = 0.0;
  for (double x : v.value().values()) acc += x;
  const std::size_t vi = v.id();
  return tape.Record(Tensor::Scalar(acc), {v},
                     [vi](Tape& t, std::size_t self) {
                       const double g = t.MutableGrad(self)[0];
                       for (double& d : t.MutableGrad(vi)) d += g;
                     });
}

Var BatchVariance(Var v) {
  Tape& tape = SameTape({v});
  const auto values = v.value().values();
  const double psi = BatchVariance(values);
  std::vector<double> dpsi = BatchVarianceGradient(values);
  const std::size_t vi = v.id();
  return tape.Record(Tensor::Scalar(psi), {v},
                     [vi, dpsi = std::move(dpsi)](Tape& t, std::size_t self) {
                       const double g = t.MutableGrad(self)[0];
                       auto dv = t.MutableGrad(vi);
                       for (std::size_t j = 0; j < dv.size(); ++j) {
                         dv[j] += g * dpsi[j];
                       }
                     });
}

Var AddScaled(Var a, Var b, double scale) {
  Tape& tape = SameTape({a, b});
  if (!a.value().SameShape(b.value())) {
    throw InputError("add: shape mismatch " + a.value().ShapeString() +
                     " vs " + b.value().ShapeString());
  }
  Tensor out = a.value();
  const auto bv = b.value().values();
  for (std::size_t j = 0; j < out.size(); ++j) out[j] += scale * bv[j];
  const std::size_t ai = a.id(), bi = b.id();
  return tape.Record(std::move(out), {a, b},
                     [ai, bi, scale](Tape& t, std::size_t self) {
                       const auto dy = t.MutableGrad(self);
                       if (t.RequiresGrad(ai)) {
                         auto da = t.MutableGrad(ai);
                         for (std::size_t j = 0; j < da.size(); ++j) {
                           da[j] += dy[j];
                         }
                       }
                       if (t.RequiresGrad(bi)) {
                         auto db = t.MutableGrad(bi);
                         for (std::size_t j = 0; j < db.size(); ++j) {
                           db[j] += scale * dy[j];
                         }
                       }
                     });
}

Var Scale(Var v, double factor) {
  Tape& tape = SameTape({v});
  Tensor out = v.value();
  for (double& x : out.values()) x *= factor;
  const std::size_t vi = v.id();
  return tape.Record(std::move(out), {v},
                     [vi, factor](Tape& t, std::size_t self) {
                       const auto dy = t.MutableGrad(self);
                       auto dv = t.MutableGrad(vi);
                       for (std::size_t j = 0; j < dv.size(); ++j) {
                         dv[j] += factor * dy[j];
                       }
                     });
}

Var Square(Var v) {
  Tape& tape = SameTape({v});
  Tensor out = v.value();
  for (double& x : out.values()) x *= x;
  const std::size_t vi = v.id();
  return tape.Record(std::move(out), {v}, [vi](Tape& t, std::size_t self) {
    const auto dy = t.MutableGrad(self);
    const auto& in = t.ValueAt(vi);
    auto dv = t.MutableGrad(vi);
    for (std::size_t j = 0; j < dv.size(); ++j) dv[j] += 2.0 * in[j] * dy[j];
  });
}

Var WeightedSum(Var v, std::span<const double> weights) {
  Tape& tape = SameTape({v});
  const auto values = v.value().values();
  if (weights.size() != values.size()) {
    throw InputError(fmt::format("weighted_sum: {} weights for {} values",
                                 weights.size(), values.size()));
  }
  double acc = 0.0;
  for (std::size_t j = 0; j < values.size(); ++j) acc += weights[j] * values[j];
  std::vector<double> w(weights.begin(), weights.end());
  const std::size_t vi = v.id();
  return tape.Record(Tensor::Scalar(acc), {v},
                     [vi, w = std::move(w)](Tape& t, std::size_t self) {
                       const double g = t.MutableGrad(self)[0];
                       auto dv = t.MutableGrad(vi);
                       for (std::size_t j = 0; j < dv.size(); ++j) {
                         dv[j] += g * w[j];
                       }
                     });
}

}  // namespace memlab
