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

#include "memlab/attacks.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "memlab/autodiff.hpp"
#include "memlab/errors.hpp"
#include "memlab/losses.hpp"
#include "memlab/rng.hpp"

namespace memlab {
namespace {

double Sign(double g) { return g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0); }

void CheckUnitBox(const Tensor& x) {
  for (double v : x.values()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw InputError(fmt::format("attack input {} outside [0, 1]", v));
    }
  }
}

// Box of feasible points around x0: [max(0, x0 - eps), min(1, x0 + eps)].
struct Feasible {
  std::vector<double> lo;
  std::vector<double> hi;

  Feasible(const Tensor& x0, double epsilon)
      : lo(x0.size()), hi(x0.size()) {
    for (std::size_t j = 0; j < x0.size(); ++j) {
      lo[j] = std::max(0.0, x0[j] - epsilon);
      hi[j] = std::min(1.0, x0[j] + epsilon);
    }
  }

  void Project(Tensor& x) const {
    for (std::size_t j = 0; j < x.size(); ++j) {
      x[j] = std::clamp(x[j], lo[j], hi[j]);
    }
  }
};

Tensor KlInputGradient(const Model& model, const Tensor& clean_logits,
                       const Tensor& x_adv) {
  Tape tape;
  const BoundModel bound = BindConstants(tape, model);
  Var target = tape.Constant(clean_logits);
  Var x = tape.Input(x_adv);
  Var kl = KlDivergence(target, Forward(bound, x));
  tape.Backward(Sum(kl));
  const auto g = tape.grad(x);
  if (g.empty()) return Tensor(x_adv.shape());
  return Tensor(x_adv.shape(), {g.begin(), g.end()});
}

template <typename GradFn>
Tensor ProjectedAscent(const Tensor& x0, const AttackParams& params,
                       std::uint64_t seed, GradFn&& grad_fn) {
  params.Validate();
  CheckUnitBox(x0);
  Tensor x = x0;
  if (params.epsilon == 0.0) return x;
  const Feasible box(x0, params.epsilon);
  if (params.random_start) {
    Rng rng(seed);
    for (std::size_t j = 0; j < x.size(); ++j) {
      x[j] += rng.Uniform(-params.epsilon, params.epsilon);
    }
    box.Project(x);
  }
  for (int step = 0; step < params.steps; ++step) {
    const Tensor g = grad_fn(x);
    for (std::size_t j = 0; j < x.size(); ++j) {
      x[j] += params.step_size * Sign(g[j]);
    }
    box.Project(x);
  }
  return x;
}

}  // namespace

void AttackParams::Validate() const {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw InputError(fmt::format("attack epsilon {} outside [0, 1]", epsilon));
  }
  if (!(step_size > 0.0) && !(epsilon == 0.0 && step_size == 0.0)) {
    throw InputError(fmt::format("attack step size {} must be positive",
                                 step_size));
  }
  if (steps < 1) throw InputError("attack needs at least one step");
  if (epsilon > 0.0 && step_size > 2.0 * epsilon) {
    spdlog::warn("attack step size {} exceeds 2 * epsilon ({})", step_size,
                 epsilon);
  }
}

AttackParams TrainingAttack(double epsilon) {
  return AttackParams{epsilon, epsilon / 4.0, 10, true};
}

AttackParams EvaluationAttack(double epsilon) {
  return AttackParams{epsilon, epsilon / 8.0, 20, true};
}

Tensor InputGradient(const Model& model, const Tensor& x,
                     std::span<const int> labels) {
  Tape tape;
  const BoundModel bound = BindConstants(tape, model);
  Var input = tape.Input(x);
  Var losses = SoftmaxCrossEntropy(Forward(bound, input), labels);
  tape.Backward(Sum(losses));
  const auto g = tape.grad(input);
  if (g.empty()) return Tensor(x.shape());
  return Tensor(x.shape(), {g.begin(), g.end()});
}

Tensor Fgsm(const Model& model, const Tensor& x, std::span<const int> labels,
            double epsilon) {
  if (!(epsilon >= 0.0)) {
    throw InputError(fmt::format("fgsm epsilon {} must be >= 0", epsilon));
  }
  CheckUnitBox(x);
  Tensor out = x;
  if (epsilon == 0.0) return out;
  const Tensor g = InputGradient(model, x, labels);
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = std::clamp(x[j] + epsilon * Sign(g[j]), 0.0, 1.0);
  }
  return out;
}

Tensor Pgd(const Model& model, const Tensor& x, std::span<const int> labels,
           const AttackParams& params, std::uint64_t seed) {
  if (labels.size() != x.rows()) {
    throw InputError(fmt::format("pgd: {} labels for {} rows", labels.size(),
                                 x.rows()));
  }
  return ProjectedAscent(x, params, seed, [&](const Tensor& xa) {
    return InputGradient(model, xa, labels);
  });
}

Tensor PgdKl(const Model& model, const Tensor& x, const AttackParams& params,
             std::uint64_t seed) {
  const Tensor clean_logits = Forward(model, x);
  return ProjectedAscent(x, params, seed, [&](const Tensor& xa) {
    return KlInputGradient(model, clean_logits, xa);
  });
}

double NaturalAccuracy(const Model& model, const Dataset& data) {
  if (data.empty()) throw InputError("accuracy of an empty dataset");
  const std::vector<int> pred = Predict(model, data.features);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    correct += pred[i] == data.labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

double RobustAccuracy(const Model& model, const Dataset& data,
                      const AttackParams& params, std::uint64_t seed) {
  if (data.empty()) throw InputError("robust accuracy of an empty dataset");
  const std::vector<int> clean = Predict(model, data.features);
  const Tensor adv = Pgd(model, data.features, data.labels, params, seed);
  const std::vector<int> attacked = Predict(model, adv);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    correct += clean[i] == data.labels[i] && attacked[i] == data.labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace memlab
