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

#ifndef MEMLAB_LOSSES_HPP_
#define MEMLAB_LOSSES_HPP_

#include <span>
#include <vector>

#include "memlab/tensor.hpp"

namespace memlab {

// Per-sample losses of one mini-batch.
struct BatchLosses {
  std::vector<double> per_sample;

  std::size_t size() const { return per_sample.size(); }
};

// Row-wise softmax of an n x k matrix, stabilized by the row max.
Tensor Softmax(const Tensor& logits);
// Row-wise log-softmax of an n x k matrix.
Tensor LogSoftmax(const Tensor& logits);

// Value-only counterparts of the tape operations in autodiff.hpp.
BatchLosses SoftmaxCrossEntropy(const Tensor& logits,
                                std::span<const int> labels);
BatchLosses KlDivergence(const Tensor& p_logits, const Tensor& q_logits);

// Population variance (1/N) sum (v_i - mean)^2.
double BatchVariance(std::span<const double> values);
// d/dv_i of BatchVariance: (2/N)(v_i - mean).
std::vector<double> BatchVarianceGradient(std::span<const double> values);

namespace internal {

// Shared argument checks for the loss functions.
void CheckClassificationInputs(const Tensor& logits,
                               std::span<const int> labels);
void CheckPairedLogits(const Tensor& p_logits, const Tensor& q_logits);

}  // namespace internal

}  // namespace memlab

#endif  // MEMLAB_LOSSES_HPP_
