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

#include "memlab/trainer.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "memlab/errors.hpp"
#include "memlab/losses.hpp"

namespace memlab {

std::string MethodName(Method method) {
  switch (method) {
    case Method::kStandard:
      return "standard";
    case Method::kPgdAt:
      return "pgd_at";
    case Method::kTrades:
      return "trades";
  }
  return "unknown";
}

Method ParseMethod(const std::string& name) {
  if (name == "standard") return Method::kStandard;
  if (name == "pgd_at") return Method::kPgdAt;
  if (name == "trades") return Method::kTrades;
  throw InputError("unknown training method '" + name + "'");
}

void DpConfig::Validate() const {
  if (!enabled) return;
  if (!(clip_norm > 0.0)) {
    throw InputError(fmt::format("dp clip norm {} must be positive", clip_norm));
  }
  if (!(noise_multiplier >= 0.0)) {
    throw InputError(fmt::format("dp noise multiplier {} must be >= 0",
                                 noise_multiplier));
  }
}

void TrainConfig::Validate() const {
  model.Validate();
  if (epochs < 1) throw InputError("epochs must be positive");
  if (batch_size < 1) throw InputError("batch size must be positive");
  if (!(learning_rate > 0.0)) throw InputError("learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw InputError("momentum must be in [0, 1)");
  }
  if (!(demem_lambda >= 0.0)) throw InputError("demem lambda must be >= 0");
  if (!(trades_beta >= 0.0)) throw InputError("trades beta must be >= 0");
  if (method != Method::kStandard) attack.Validate();
  if (track_robust_accuracy) eval_attack.Validate();
  dp.Validate();
}

double DememTotalLoss(const BatchLosses& per_sample, double lambda) {
  if (per_sample.per_sample.empty()) {
    throw InputError("demem loss of an empty batch");
  }
  if (!(lambda >= 0.0)) throw InputError("demem lambda must be >= 0");
  const auto& v = per_sample.per_sample;
  const double mean =
      std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (lambda == 0.0) return mean;
  return mean + lambda * BatchVariance(v);
}

Var DememTotalLoss(Var per_sample, double lambda) {
  if (per_sample.value().size() == 0) {
    throw InputError("demem loss of an empty batch");
  }
  if (!(lambda >= 0.0)) throw InputError("demem lambda must be >= 0");
  Var mean = Mean(per_sample);
  if (lambda == 0.0) return mean;
  return AddScaled(mean, BatchVariance(per_sample), lambda);
}

std::vector<double> ClipPerSampleGradient(std::span<const double> g,
                                          double clip_norm) {
  if (!(clip_norm > 0.0)) throw InputError("clip norm must be positive");
  double sq = 0.0;
  for (double v : g) {
    if (!std::isfinite(v)) throw NumericError("non-finite per-sample gradient");
    sq += v * v;
  }
  std::vector<double> out(g.begin(), g.end());
  const double norm = std::sqrt(sq);
  if (norm > clip_norm) {
    const double scale = clip_norm / norm;
    for (double& v : out) v *= scale;
  }
  return out;
}

std::vector<double> PrivatizeGradient(
    std::span<const std::vector<double>> per_sample_grads, const DpConfig& dp,
    Rng& rng) {
  if (per_sample_grads.empty()) {
    throw InputError("dp step needs at least one per-sample gradient");
  }
  dp.Validate();
  const std::size_t dim = per_sample_grads.front().size();
  std::vector<double> sum(dim, 0.0);
  for (const auto& g : per_sample_grads) {
    if (g.size() != dim) throw InputError("per-sample gradients differ in size");
    const std::vector<double> clipped = ClipPerSampleGradient(g, dp.clip_norm);
    for (std::size_t j = 0; j < dim; ++j) sum[j] += clipped[j];
  }
  const double stddev = dp.noise_multiplier * dp.clip_norm;
  const double inv_n = 1.0 / static_cast<double>(per_sample_grads.size());
  for (double& v : sum) {
    if (stddev > 0.0) v += stddev * rng.Normal();
    v *= inv_n;
  }
  return sum;
}

std::vector<double> DpSgdStep(
    std::span<const std::vector<double>> per_sample_grads, const DpConfig& dp,
    double learning_rate, Rng& rng) {
  std::vector<double> update = PrivatizeGradient(per_sample_grads, dp, rng);
  for (double& v : update) v *= -learning_rate;
  return update;
}

namespace {

struct BatchInputs {
  Tensor clean;
  Tensor adversarial;  // unused for the standard method
  std::vector<int> labels;
};

// Per-sample objective of the method, recorded on the tape.
Var MethodLosses(const TrainConfig& config, const BoundModel& bound,
                 Tape& tape, const BatchInputs& in) {
  switch (config.method) {
    case Method::kStandard:
      return SoftmaxCrossEntropy(Forward(bound, tape.Constant(in.clean)),
                                 in.labels);
    case Method::kPgdAt:
      return SoftmaxCrossEntropy(
          Forward(bound, tape.Constant(in.adversarial)), in.labels);
    case Method::kTrades: {
      Var clean_logits = Forward(bound, tape.Constant(in.clean));
      Var adv_logits = Forward(bound, tape.Constant(in.adversarial));
      return AddScaled(SoftmaxCrossEntropy(clean_logits, in.labels),
                       KlDivergence(clean_logits, adv_logits),
                       config.trades_beta);
    }
  }
  throw InputError("unknown method");
}

BatchInputs SliceRow(const BatchInputs& in, std::size_t i) {
  BatchInputs out;
  const std::size_t d = in.clean.cols();
  auto row = [d](const Tensor& t, std::size_t r) {
    auto s = t.row(r);
    return Tensor::Matrix(1, d, {s.begin(), s.end()});
  };
  out.clean = row(in.clean, i);
  if (in.adversarial.size() > 0) out.adversarial = row(in.adversarial, i);
  out.labels = {in.labels[i]};
  return out;
}

struct StepGradient {
  std::vector<double> grad;
  std::vector<double> losses;
  double max_clipped_norm = 0.0;
};

StepGradient BatchGradient(const TrainConfig& config, Model& model,
                           const BatchInputs& in) {
  Tape tape;
  const BoundModel bound = BindParameters(tape, model);
  Var per_sample = MethodLosses(config, bound, tape, in);
  Var total = DememTotalLoss(per_sample, config.demem_lambda);
  tape.Backward(total);
  StepGradient out;
  out.grad = model.FlatGradient();
  const auto v = per_sample.value().values();
  out.losses.assign(v.begin(), v.end());
  return out;
}

// Per-sample gradients of each sample's share of the total loss, clipped and
// noised. The share of sample i is taken as (1 + 2 lambda (l_i - mean)) grad
// l_i: the batch mean is held fixed, and these shares still sum to N times
// the exact gradient of mean + lambda * variance.
StepGradient PrivateGradient(const TrainConfig& config, Model& model,
                             const BatchInputs& in, Rng& noise_rng) {
  const std::size_t n = in.labels.size();
  StepGradient out;
  out.losses.resize(n);
  std::vector<std::vector<double>> grads(n);
  for (std::size_t i = 0; i < n; ++i) {
    const BatchInputs row = SliceRow(in, i);
    Tape tape;
    const BoundModel bound = BindParameters(tape, model);
    Var loss = MethodLosses(config, bound, tape, row);
    tape.Backward(Sum(loss));
    out.losses[i] = loss.value()[0];
    grads[i] = model.FlatGradient();
  }
  if (config.demem_lambda != 0.0) {
    const double mean = std::accumulate(out.losses.begin(), out.losses.end(),
                                        0.0) /
                        static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double w =
          1.0 + 2.0 * config.demem_lambda * (out.losses[i] - mean);
      for (double& g : grads[i]) g *= w;
    }
  }
  for (const auto& g : grads) {
    const std::vector<double> clipped =
        ClipPerSampleGradient(g, config.dp.clip_norm);
    double sq = 0.0;
    for (double v : clipped) sq += v * v;
    out.max_clipped_norm = std::max(out.max_clipped_norm, std::sqrt(sq));
  }
  if (out.max_clipped_norm > config.dp.clip_norm * (1.0 + 1e-12)) {
    throw NumericError("clipped per-sample gradient exceeds the clip norm");
  }
  out.grad = PrivatizeGradient(grads, config.dp, noise_rng);
  return out;
}

}  // namespace

TrainResult Train(const TrainConfig& config, const Dataset& data,
                  const StepObserver& observer) {
  config.Validate();
  data.Validate();
  if (config.model.layer_widths.front() != data.dim() ||
      config.model.layer_widths.back() != data.num_classes) {
    throw InputError(fmt::format(
        "model widths {}..{} do not match data dim {} / {} classes",
        config.model.layer_widths.front(), config.model.layer_widths.back(),
        data.dim(), data.num_classes));
  }

  TrainResult result{InitModel(config.model, MixSeed(config.seed, 0)), {}};
  Model& model = result.model;
  Rng shuffle_rng(MixSeed(config.seed, 1));
  const std::uint64_t attack_base = MixSeed(config.seed, 2);
  Rng noise_rng(MixSeed(config.seed, 3));

  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> velocity(model.num_parameters(), 0.0);
  std::size_t global_step = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.Shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    double psi_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + config.batch_size);
      const Dataset batch = data.Subset(
          std::span<const std::size_t>(order).subspan(start, end - start));
      BatchInputs in{batch.features, Tensor(), batch.labels};
      const std::uint64_t attack_seed = MixSeed(attack_base, global_step);
      StepGradient step;
      try {
        if (config.method == Method::kPgdAt) {
          in.adversarial =
              Pgd(model, in.clean, in.labels, config.attack, attack_seed);
        } else if (config.method == Method::kTrades) {
          in.adversarial = PgdKl(model, in.clean, config.attack, attack_seed);
        }
        step = config.dp.enabled ? PrivateGradient(config, model, in, noise_rng)
                                 : BatchGradient(config, model, in);
      } catch (const NumericError& e) {
        throw TrainingError(fmt::format(
            "training diverged at epoch {} step {}: {}", epoch, global_step,
            e.what()));
      }
      const double psi = BatchVariance(step.losses);
      const double total =
          DememTotalLoss(BatchLosses{step.losses}, config.demem_lambda);
      if (!std::isfinite(total)) {
        throw TrainingError(fmt::format(
            "training diverged: non-finite loss at epoch {} step {}", epoch,
            global_step));
      }
      for (std::size_t j = 0; j < velocity.size(); ++j) {
        velocity[j] = config.momentum * velocity[j] + step.grad[j];
        step.grad[j] = -config.learning_rate * velocity[j];
      }
      model.AddToParameters(step.grad);
      if (!model.AllFinite()) {
        throw TrainingError(fmt::format(
            "training diverged: non-finite parameters at epoch {} step {}",
            epoch, global_step));
      }

      loss_sum += std::accumulate(step.losses.begin(), step.losses.end(), 0.0);
      psi_sum += psi;
      ++batches;
      if (observer) {
        observer(StepInfo{epoch, global_step, end - start, total, psi,
                          step.max_clipped_norm},
                 model);
      }
      ++global_step;
    }

    EpochRecord record;
    record.epoch = epoch;
    record.mean_loss = loss_sum / static_cast<double>(n);
    record.psi = psi_sum / static_cast<double>(batches);
    record.nat_acc = NaturalAccuracy(model, data);
    if (config.track_robust_accuracy) {
      record.rob_acc =
          RobustAccuracy(model, data, config.eval_attack,
                         MixSeed(MixSeed(config.seed, 4), epoch));
    }
    result.history.epochs.push_back(record);
  }
  return result;
}

void WriteHistoryCsv(const TrainHistory& history, std::ostream& out) {
  out << "epoch,mean_loss,psi,nat_acc,rob_acc\n";
  for (const EpochRecord& r : history.epochs) {
    out << fmt::format("{},{},{},{},{}\n", r.epoch, r.mean_loss, r.psi,
                       r.nat_acc, r.rob_acc ? fmt::format("{}", *r.rob_acc)
                                            : std::string());
  }
}

}  // namespace memlab
