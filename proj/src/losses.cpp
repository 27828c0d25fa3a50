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

#include "memlab/losses.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "memlab/errors.hpp"

namespace memlab {

namespace internal {

void CheckClassificationInputs(const Tensor& logits,
                               std::span<const int> labels) {
  if (logits.rank() != 2) {
    throw InputError("logits must be an n x k matrix, got " +
                     logits.ShapeString());
  }
  const std::size_t n = logits.rows();
  const std::size_t k = logits.cols();
  if (k < 2) throw InputError("need at least 2 classes");
  if (labels.size() != n) {
    throw InputError(fmt::format("{} labels for {} logit rows", labels.size(),
                                 n));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k) {
      throw InputError(fmt::format("label {} at row {} outside [0, {})",
                                   labels[i], i, k));
    }
  }
  if (!logits.AllFinite()) throw NumericError("non-finite logit");
}

void CheckPairedLogits(const Tensor& p_logits, const Tensor& q_logits) {
  if (p_logits.rank() != 2 || !p_logits.SameShape(q_logits)) {
    throw InputError("kl_divergence shape mismatch: " +
                     p_logits.ShapeString() + " vs " +
                     q_logits.ShapeString());
  }
  if (p_logits.cols() < 2) throw InputError("need at least 2 classes");
  if (!p_logits.AllFinite() || !q_logits.AllFinite()) {
    throw NumericError("non-finite logit");
  }
}

}  // namespace internal

Tensor LogSoftmax(const Tensor& logits) {
  Tensor out(logits.shape());
  const std::size_t k = logits.cols();
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto in = logits.row(i);
    auto o = out.row(i);
    const double m = *std::max_element(in.begin(), in.end());
    double s = 0.0;
    for (std::size_t c = 0; c < k; ++c) s += std::exp(in[c] - m);
    const double lse = m + std::log(s);
    for (std::size_t c = 0; c < k; ++c) o[c] = in[c] - lse;
  }
  return out;
}

Tensor Softmax(const Tensor& logits) {
  Tensor out(logits.shape());
  const std::size_t k = logits.cols();
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto in = logits.row(i);
    auto o = out.row(i);
    const double m = *std::max_element(in.begin(), in.end());
    double s = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      o[c] = std::exp(in[c] - m);
      s += o[c];
    }
    for (std::size_t c = 0; c < k; ++c) o[c] /= s;
  }
  return out;
}

BatchLosses SoftmaxCrossEntropy(const Tensor& logits,
                                std::span<const int> labels) {
  internal::CheckClassificationInputs(logits, labels);
  const Tensor log_p = LogSoftmax(logits);
  BatchLosses out;
  out.per_sample.resize(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    out.per_sample[i] = -log_p.at(i, static_cast<std::size_t>(labels[i]));
  }
  return out;
}

BatchLosses KlDivergence(const Tensor& p_logits, const Tensor& q_logits) {
  internal::CheckPairedLogits(p_logits, q_logits);
  const Tensor log_p = LogSoftmax(p_logits);
  const Tensor log_q = LogSoftmax(q_logits);
  BatchLosses out;
  out.per_sample.resize(p_logits.rows());
  for (std::size_t i = 0; i < p_logits.rows(); ++i) {
    double kl = 0.0;
    for (std::size_t c = 0; c < p_logits.cols(); ++c) {
      const double lp = log_p.at(i, c);
      kl += std::exp(lp) * (lp - log_q.at(i, c));
    }
    // Rounding can leave tiny negatives when p == q.
    out.per_sample[i] = std::max(kl, 0.0);
  }
  return out;
}

double BatchVariance(std::span<const double> values) {
  if (values.empty()) throw InputError("batch_variance of an empty vector");
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double acc = 0.0;
  for (double v : values) acc += (v - mean) * (v - mean);
  return acc / n;
}

std::vector<double> BatchVarianceGradient(std::span<const double> values) {
  if (values.empty()) throw InputError("batch_variance of an empty vector");
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  std::vector<double> g(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    g[i] = 2.0 / n * (values[i] - mean);
  }
  return g;
}

}  // namespace memlab
