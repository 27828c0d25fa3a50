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

#ifndef MEMLAB_ATTACKS_HPP_
#define MEMLAB_ATTACKS_HPP_

#include <cstdint>
#include <span>

#include "memlab/dataset.hpp"
#include "memlab/model.hpp"
#include "memlab/tensor.hpp"

namespace memlab {

// L-infinity attack settings, in input units (inputs live in [0, 1]).
struct AttackParams {
  double epsilon = 0.05;
  double step_size = 0.0125;
  int steps = 10;
  bool random_start = true;

  // Throws InputError for epsilon outside [0, 1], a non-positive step size
  // (zero is allowed with epsilon = 0) or steps < 1. Logs a warning when
  // step_size > 2 * epsilon.
  void Validate() const;
};

// Training-time attack: 10 steps, step epsilon / 4, random start.
AttackParams TrainingAttack(double epsilon);
// Evaluation attack: 20 steps, step epsilon / 8, random start.
AttackParams EvaluationAttack(double epsilon);

// Gradient of sum_i CE(f(x_i), y_i) with respect to x.
Tensor InputGradient(const Model& model, const Tensor& x,
                     std::span<const int> labels);

// clip_[0,1](x + epsilon * sign(grad_x CE)); sign(0) = 0.
Tensor Fgsm(const Model& model, const Tensor& x, std::span<const int> labels,
            double epsilon);

// Projected sign-gradient ascent on the cross-entropy inside the
// intersection of the epsilon ball around x and the unit box.
Tensor Pgd(const Model& model, const Tensor& x, std::span<const int> labels,
           const AttackParams& params, std::uint64_t seed);

// Same projection, ascending KL(f(x) || f(x')) with f(x) held fixed. Used by
// TRADES; the zero gradient at x' = x means random_start should be on.
Tensor PgdKl(const Model& model, const Tensor& x, const AttackParams& params,
             std::uint64_t seed);

double NaturalAccuracy(const Model& model, const Dataset& data);

// Fraction of samples classified correctly both clean and under PGD. With
// epsilon = 0 this equals NaturalAccuracy exactly.
double RobustAccuracy(const Model& model, const Dataset& data,
                      const AttackParams& params, std::uint64_t seed);

}  // namespace memlab

#endif  // MEMLAB_ATTACKS_HPP_
