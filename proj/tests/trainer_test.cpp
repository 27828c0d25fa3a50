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

#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "memlab/attacks.hpp"
#include "memlab/autodiff.hpp"
#include "memlab/data_io.hpp"
#include "memlab/errors.hpp"
#include "memlab/losses.hpp"
#include "memlab/rng.hpp"
#include "memlab/trainer.hpp"

namespace memlab {
namespace {

using ::testing::DoubleEq;
using ::testing::ElementsAre;

// Uniform points labelled by x0 + x1 > 1, with a 0.1 gap around the line.
Dataset Separable(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> xs;
  Dataset data;
  while (data.labels.size() < n) {
    const double a = rng.Uniform(), b = rng.Uniform();
    if (std::abs(a + b - 1.0) < 0.1) continue;
    xs.push_back(a);
    xs.push_back(b);
    data.labels.push_back(a + b > 1.0 ? 1 : 0);
  }
  data.features = Tensor::Matrix(n, 2, xs);
  data.num_classes = 2;
  return data;
}

TrainConfig SmallConfig(Method method, std::uint64_t seed) {
  TrainConfig config;
  config.method = method;
  config.model.layer_widths = {2, 16, 2};
  config.epochs = 20;
  config.batch_size = 16;
  config.learning_rate = 0.05;
  config.momentum = 0.9;
  config.seed = seed;
  return config;
}

std::vector<std::vector<double>> Trajectory(const TrainConfig& config,
                                            const Dataset& data) {
  std::vector<std::vector<double>> params;
  Train(config, data, [&](const StepInfo&, const Model& model) {
    params.push_back(model.FlatParameters());
  });
  return params;
}

TEST(DememTotalLoss, HandValues) {
  const BatchLosses losses{{1.0, 2.0, 3.0, 4.0}};
  EXPECT_EQ(DememTotalLoss(losses, 0.0), 2.5);
  EXPECT_EQ(DememTotalLoss(losses, 0.2), 2.75);
  EXPECT_EQ(DememTotalLoss(BatchLosses{{0.3, 0.3, 0.3}}, 5.0), 0.3);
  EXPECT_THROW(DememTotalLoss(BatchLosses{}, 0.1), InputError);
}

TEST(DememTotalLoss, TapeGradient) {
  Tape tape;
  Var v = tape.Input(Tensor::Vector({1.0, 2.0, 3.0, 4.0}));
  Var total = DememTotalLoss(v, 1.0);
  EXPECT_DOUBLE_EQ(total.value()[0], 2.5 + 1.25);
  tape.Backward(total);
  // 1/N + lambda (2/N)(v - mean)
  const auto g = tape.grad(v);
  EXPECT_THAT(std::vector<double>(g.begin(), g.end()),
              ElementsAre(DoubleEq(0.25 - 0.75), DoubleEq(0.25 - 0.25),
                          DoubleEq(0.25 + 0.25), DoubleEq(0.25 + 0.75)));
}

TEST(ClipPerSampleGradient, Examples) {
  EXPECT_THAT(ClipPerSampleGradient(std::vector<double>{3, 4}, 10.0),
              ElementsAre(3.0, 4.0));
  EXPECT_THAT(ClipPerSampleGradient(std::vector<double>{3, 4}, 1.0),
              ElementsAre(DoubleEq(0.6), DoubleEq(0.8)));
  EXPECT_THAT(ClipPerSampleGradient(std::vector<double>{0, 0, 0}, 0.5),
              ElementsAre(0.0, 0.0, 0.0));
}

TEST(ClipPerSampleGradient, Errors) {
  EXPECT_THROW(ClipPerSampleGradient(std::vector<double>{NAN, 1}, 1.0),
               NumericError);
  EXPECT_THROW(ClipPerSampleGradient(std::vector<double>{1, 1}, 0.0),
               InputError);
}

TEST(DpSgdStep, ClipsThenAverages) {
  const std::vector<std::vector<double>> grads = {{3, 4}, {0, 0}};
  Rng rng(0);
  const DpConfig dp{true, 0.0, 1.0};
  EXPECT_THAT(DpSgdStep(grads, dp, 1.0, rng),
              ElementsAre(DoubleEq(-0.3), DoubleEq(-0.4)));
}

TEST(DpSgdStep, InertClippingIsPlainAverage) {
  Rng data_rng(4);
  std::vector<std::vector<double>> grads(7, std::vector<double>(5));
  for (auto& g : grads) {
    for (double& v : g) v = data_rng.Uniform(-1.0, 1.0);
  }
  Rng rng(0);
  const auto update = DpSgdStep(grads, DpConfig{true, 0.0, 1e9}, 0.1, rng);
  for (std::size_t j = 0; j < 5; ++j) {
    double sum = 0.0;
    for (const auto& g : grads) sum += g[j];
    EXPECT_NEAR(update[j], -0.1 * sum / 7.0, 1e-12);
  }
}

TEST(DpSgdStep, NoiseStd) {
  const double sigma = 0.05, clip = 10.0, lr = 0.5;
  const std::size_t n = 4, draws = 100000;
  const std::vector<std::vector<double>> grads(n, std::vector<double>(1, 0.0));
  Rng rng(123);
  double sum = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < draws; ++i) {
    const double v = DpSgdStep(grads, DpConfig{true, sigma, clip}, lr, rng)[0];
    sum += v;
    sq += v * v;
  }
  const double mean = sum / draws;
  const double sd = std::sqrt(sq / draws - mean * mean);
  const double expected = lr * sigma * clip / static_cast<double>(n);
  EXPECT_NEAR(sd, expected, 3.0 * expected / std::sqrt(2.0 * draws));
}

TEST(DpSgdStep, EmptyBatchIsInputError) {
  Rng rng(0);
  EXPECT_THROW(DpSgdStep({}, DpConfig{true, 0.0, 1.0}, 0.1, rng), InputError);
}

TEST(Train, SeparableDataIsLearned) {
  const Dataset data = Separable(200, 1);
  TrainConfig config = SmallConfig(Method::kStandard, 3);
  config.epochs = 60;
  const TrainResult result = Train(config, data);
  EXPECT_GE(result.history.epochs.back().nat_acc, 0.99);
  EXPECT_EQ(NaturalAccuracy(result.model, data),
            result.history.epochs.back().nat_acc);
}

TEST(Train, DeterministicInConfig) {
  const Dataset data = Separable(64, 2);
  for (Method method : {Method::kStandard, Method::kPgdAt, Method::kTrades}) {
    TrainConfig config = SmallConfig(method, 9);
    config.epochs = 3;
    config.demem_lambda = 0.2;
    EXPECT_EQ(Trajectory(config, data), Trajectory(config, data))
        << MethodName(method);
  }
}

TEST(Train, ZeroLambdaMatchesUnregularizedReference) {
  const Dataset data = Separable(50, 5);
  TrainConfig config = SmallConfig(Method::kStandard, 17);
  config.epochs = 4;
  config.batch_size = 8;
  const auto trained = Trajectory(config, data);

  // Plain momentum SGD on the batch-mean cross-entropy.
  Model model = InitModel(config.model, MixSeed(config.seed, 0));
  Rng shuffle(MixSeed(config.seed, 1));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> velocity(model.num_parameters(), 0.0);
  std::vector<std::vector<double>> reference;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle.Shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < data.size();
         start += config.batch_size) {
      const std::size_t len =
          std::min(config.batch_size, data.size() - start);
      const Dataset batch =
          data.Subset(std::span<const std::size_t>(order).subspan(start, len));
      Tape tape;
      const BoundModel bound = BindParameters(tape, model);
      Var logits = Forward(bound, tape.Constant(batch.features));
      tape.Backward(Mean(SoftmaxCrossEntropy(logits, batch.labels)));
      const auto grad = model.FlatGradient();
      std::vector<double> delta(grad.size());
      for (std::size_t j = 0; j < grad.size(); ++j) {
        velocity[j] = config.momentum * velocity[j] + grad[j];
        delta[j] = -config.learning_rate * velocity[j];
      }
      model.AddToParameters(delta);
      reference.push_back(model.FlatParameters());
    }
  }
  EXPECT_EQ(trained, reference);
}

TEST(Train, InertDpMatchesPlainSgd) {
  const Dataset data = Separable(40, 6);
  TrainConfig plain = SmallConfig(Method::kStandard, 21);
  plain.epochs = 20;
  plain.batch_size = 8;  // 5 steps per epoch, 100 steps
  TrainConfig dp = plain;
  dp.dp = DpConfig{true, 0.0, 1e9};
  const auto a = Trajectory(plain, data);
  const auto b = Trajectory(dp, data);
  ASSERT_EQ(a.size(), 100u);
  ASSERT_EQ(b.size(), 100u);
  for (std::size_t s = 0; s < a.size(); ++s) {
    for (std::size_t j = 0; j < a[s].size(); ++j) {
      ASSERT_NEAR(a[s][j], b[s][j], 1e-12) << "step " << s;
    }
  }
}

TEST(Train, DpClipNormReported) {
  const Dataset data = Separable(32, 8);
  TrainConfig config = SmallConfig(Method::kPgdAt, 2);
  config.epochs = 2;
  config.dp = DpConfig{true, 0.5, 0.1};
  config.demem_lambda = 0.2;
  Train(config, data, [](const StepInfo& info, const Model&) {
    EXPECT_LE(info.max_clipped_norm, 0.1 * (1.0 + 1e-12));
  });
}

TEST(Train, PgdAtIsMoreRobustThanStandard) {
  const Dataset data = GenerateDataset(DatasetKind::kTwoGaussians, 200, 0.3, 4);
  TrainConfig standard = SmallConfig(Method::kStandard, 12);
  standard.epochs = 40;
  standard.attack = TrainingAttack(0.1);
  TrainConfig adversarial = standard;
  adversarial.method = Method::kPgdAt;
  const Model a = Train(standard, data).model;
  const Model b = Train(adversarial, data).model;
  const AttackParams eval = TrainingAttack(0.1);
  EXPECT_GT(RobustAccuracy(b, data, eval, 1), RobustAccuracy(a, data, eval, 1));
}

TEST(Train, LambdaShrinksFinalLossVariance) {
  const Dataset data = GenerateDataset(DatasetKind::kTwoGaussians, 200, 0.5, 7);
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    TrainConfig base = SmallConfig(Method::kStandard, seed);
    base.epochs = 15;
    TrainConfig demem = base;
    demem.demem_lambda = 1.0;
    const double psi0 = Train(base, data).history.epochs.back().psi;
    const double psi1 = Train(demem, data).history.epochs.back().psi;
    wins += psi1 < psi0;
  }
  EXPECT_GE(wins, 8);
}

TEST(Train, TracksRobustAccuracyWhenAsked) {
  const Dataset data = Separable(32, 3);
  TrainConfig config = SmallConfig(Method::kTrades, 1);
  config.epochs = 2;
  config.track_robust_accuracy = true;
  const TrainResult result = Train(config, data);
  ASSERT_EQ(result.history.epochs.size(), 2u);
  for (const auto& r : result.history.epochs) {
    ASSERT_TRUE(r.rob_acc.has_value());
    EXPECT_LE(*r.rob_acc, r.nat_acc);
  }
  std::ostringstream csv;
  WriteHistoryCsv(result.history, csv);
  EXPECT_THAT(csv.str(),
              ::testing::StartsWith("epoch,mean_loss,psi,nat_acc,rob_acc\n1,"));
}

TEST(Train, DivergenceIsTrainingError) {
  const Dataset data = Separable(32, 3);
  TrainConfig config = SmallConfig(Method::kStandard, 1);
  config.learning_rate = 1e200;
  EXPECT_THROW(Train(config, data), TrainingError);
}

TEST(Train, WidthMismatchIsInputError) {
  TrainConfig config = SmallConfig(Method::kStandard, 1);
  config.model.layer_widths = {3, 4, 2};
  EXPECT_THROW(Train(config, Separable(8, 1)), InputError);
}

TEST(Method, NamesRoundTrip) {
  for (Method m : {Method::kStandard, Method::kPgdAt, Method::kTrades}) {
    EXPECT_EQ(ParseMethod(MethodName(m)), m);
  }
  EXPECT_THROW(ParseMethod("sgd"), InputError);
}

}  // namespace
}  // namespace memlab
