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

#ifndef MEMLAB_TRAINER_HPP_
#define MEMLAB_TRAINER_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "memlab/attacks.hpp"
#include "memlab/autodiff.hpp"
#include "memlab/dataset.hpp"
#include "memlab/losses.hpp"
#include "memlab/model.hpp"
#include "memlab/rng.hpp"

namespace memlab {

enum class Method { kStandard, kPgdAt, kTrades };

std::string MethodName(Method method);
// Accepts "standard", "pgd_at", "trades".
Method ParseMethod(const std::string& name);

struct DpConfig {
  bool enabled = false;
  double noise_multiplier = 0.0;  // sigma
  double clip_norm = 1.0;         // C

  void Validate() const;
};

struct TrainConfig {
  Method method = Method::kStandard;
  ModelConfig model;
  int epochs = 10;
  std::size_t batch_size = 128;
  double learning_rate = 0.1;
  double momentum = 0.9;
  double demem_lambda = 0.0;
  double trades_beta = 6.0;
  AttackParams attack = TrainingAttack(0.05);
  DpConfig dp;
  std::uint64_t seed = 0;
  // Evaluate robust accuracy on the training set after every epoch.
  bool track_robust_accuracy = false;
  AttackParams eval_attack = EvaluationAttack(0.05);

  void Validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0.0;  // mean optimized per-sample loss over the epoch
  double psi = 0.0;        // mean mini-batch loss variance over the epoch
  double nat_acc = 0.0;    // training-set accuracy after the epoch
  std::optional<double> rob_acc;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
};

// Emitted after every optimizer step.
struct StepInfo {
  int epoch = 0;
  std::size_t step = 0;       // global step index
  std::size_t batch_size = 0;
  double total_loss = 0.0;    // mean + lambda * psi
  double psi = 0.0;
  // Largest per-sample gradient norm after clipping; 0 without DP.
  double max_clipped_norm = 0.0;
};

using StepObserver = std::function<void(const StepInfo&, const Model&)>;

struct TrainResult {
  Model model;
  TrainHistory history;
};

// mean(per_sample) + lambda * BatchVariance(per_sample). lambda = 0 returns
// the mean without touching the variance.
double DememTotalLoss(const BatchLosses& per_sample, double lambda);
Var DememTotalLoss(Var per_sample, double lambda);

// g * min(1, C / ||g||_2).
std::vector<double> ClipPerSampleGradient(std::span<const double> g,
                                          double clip_norm);

// (1/N) (sum_i clip(g_i, C) + zeta), zeta ~ N(0, sigma^2 C^2 I).
std::vector<double> PrivatizeGradient(
    std::span<const std::vector<double>> per_sample_grads, const DpConfig& dp,
    Rng& rng);

// Parameter update -lr * PrivatizeGradient(...).
std::vector<double> DpSgdStep(
    std::span<const std::vector<double>> per_sample_grads, const DpConfig& dp,
    double learning_rate, Rng& rng);

// Deterministic in (config, data). Throws TrainingError on divergence.
TrainResult Train(const TrainConfig& config, const Dataset& data,
                  const StepObserver& observer = {});

// CSV with header epoch,mean_loss,psi,nat_acc,rob_acc.
void WriteHistoryCsv(const TrainHistory& history, std::ostream& out);

}  // namespace memlab

#endif  // MEMLAB_TRAINER_HPP_
