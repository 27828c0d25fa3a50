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

#ifndef MEMLAB_AUTODIFF_HPP_
#define MEMLAB_AUTODIFF_HPP_

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "memlab/tensor.hpp"

namespace memlab {

class Tape;

// Handle to a node recorded on a Tape. Cheap to copy; only valid while its
// tape is alive.
class Var {
 public:
  Var() = default;

  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }
  const Tensor& value() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Define-by-run record of a computation. Nodes are appended in evaluation
// order, so the node list is already topologically sorted and Backward walks
// it once in reverse.
class Tape {
 public:
  // Propagates the gradient of node `self` into the gradients of its inputs.
  using BackwardFn = std::function<void(Tape& tape, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf without gradient.
  Var Constant(Tensor value);
  // Leaf whose gradient is readable through grad() after Backward.
  Var Input(Tensor value);
  // Leaf bound to an external tensor. Backward overwrites parameter.grad with
  // the sum of the gradients of every node bound to it.
  Var Parameter(Tensor& parameter);

  Var Record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn);

  const Tensor& value(Var v) const;
  // Gradient of the last Backward with respect to `v`; empty when `v` does
  // not depend on any gradient-carrying leaf.
  std::span<const double> grad(Var v) const;

  // For BackwardFn implementations. MutableGrad is zero-initialized on first
  // access.
  const Tensor& ValueAt(std::size_t id) const { return nodes_[id].value; }
  std::span<double> MutableGrad(std::size_t id);
  bool RequiresGrad(std::size_t id) const { return nodes_[id].requires_grad; }

  // Reverse-mode sweep from a single-element loss. Throws UsageError when the
  // loss belongs to another tape or is not a scalar.
  void Backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    std::vector<double> grad;
    BackwardFn backward;
    Tensor* bound = nullptr;
    bool requires_grad = false;
  };

  Var Append(Node node);
  void CheckOwned(Var v) const;

  std::vector<Node> nodes_;
};

// Differentiable operations. All inputs must live on the same tape.

// x: n x d, weight: k x d, bias: k -> n x k.
Var Linear(Var x, Var weight, Var bias);
Var Relu(Var x);
// Per-sample -log softmax(logits_i)[label_i], log-sum-exp stabilized -> [n].
Var SoftmaxCrossEntropy(Var logits, std::span<const int> labels);
// Per-sample KL(softmax(p_i) || softmax(q_i)) -> [n].
Var KlDivergence(Var p_logits, Var q_logits);
Var Mean(Var v);
Var Sum(Var v);
// Population variance (divide by n) of the entries of v -> [1].
Var BatchVariance(Var v);
// a + scale * b, same shapes.
Var AddScaled(Var a, Var b, double scale);
Var Scale(Var v, double factor);
// Elementwise v^2.
Var Square(Var v);
// sum_i weights[i] * v[i] -> [1].
Var WeightedSum(Var v, std::span<const double> weights);

}  // namespace memlab

#endif  // MEMLAB_AUTODIFF_HPP_
