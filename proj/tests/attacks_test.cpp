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

#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "memlab/attacks.hpp"
#include "memlab/errors.hpp"
#include "memlab/losses.hpp"
#include "memlab/model.hpp"
#include "memlab/rng.hpp"

namespace memlab {
namespace {

Model LinearModel(std::size_t dim, std::vector<double> params) {
  ModelConfig config;
  config.layer_widths = {dim, 2};
  Model model = InitModel(config, 0);
  model.SetFlatParameters(params);
  return model;
}

// z1 - z0 = 2x - 1: class 1 above 0.5.
Model ThresholdModel() { return LinearModel(1, {-1.0, 1.0, 0.5, -0.5}); }

Dataset Points(std::vector<double> xs, std::vector<int> labels) {
  Dataset data;
  const std::size_t n = xs.size();
  data.features = Tensor::Matrix(n, 1, std::move(xs));
  data.labels = std::move(labels);
  data.num_classes = 2;
  return data;
}

double MeanLoss(const Model& model, const Tensor& x,
                const std::vector<int>& labels) {
  const BatchLosses losses = SoftmaxCrossEntropy(Forward(model, x), labels);
  double sum = 0.0;
  for (double v : losses.per_sample) sum += v;
  return sum / static_cast<double>(losses.per_sample.size());
}

TEST(Fgsm, ZeroEpsilonIsIdentity) {
  const Model model = ThresholdModel();
  const Tensor x = Tensor::Matrix(3, 1, {0.1, 0.5, 0.9});
  const Tensor adv = Fgsm(model, x, std::vector<int>{0, 1, 1}, 0.0);
  EXPECT_EQ(std::vector<double>(adv.values().begin(), adv.values().end()),
            std::vector<double>({0.1, 0.5, 0.9}));
}

TEST(Fgsm, OneDimensionalIncreasingLoss) {
  // Label 0 loss grows with x, so the attack moves right and clips at 1.
  const Model model = ThresholdModel();
  const Tensor x = Tensor::Matrix(4, 1, {0.0, 0.3, 0.95, 1.0});
  const double eps = 0.1;
  const Tensor adv = Fgsm(model, x, std::vector<int>{0, 0, 0, 0}, eps);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_DOUBLE_EQ(adv[i], std::min(x[i] + eps, 1.0)) << i;
  }
}

TEST(Fgsm, NegativeEpsilonIsInputError) {
  const Tensor x = Tensor::Matrix(1, 1, {0.5});
  EXPECT_THROW(Fgsm(ThresholdModel(), x, std::vector<int>{0}, -0.1),
               InputError);
}

TEST(Pgd, ZeroEpsilonIsIdentity) {
  const Model model = ThresholdModel();
  const Tensor x = Tensor::Matrix(3, 1, {0.2, 0.4, 0.6});
  AttackParams params{0.0, 0.01, 20, true};
  const Tensor adv = Pgd(model, x, std::vector<int>{0, 0, 1}, params, 3);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(adv[i], x[i]);
}

TEST(Pgd, ConstraintsHoldOnRandomNets) {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    ModelConfig config;
    config.layer_widths = {3, 1 + rng.Index(6), 2};
    const Model model = InitModel(config, rng.NextU64());
    const std::size_t n = 1 + rng.Index(5);
    std::vector<double> xs(n * 3);
    std::vector<int> labels(n);
    for (double& v : xs) v = rng.Index(4) == 0 ? std::round(rng.Uniform())
                                               : rng.Uniform();
    for (int& y : labels) y = static_cast<int>(rng.Index(2));
    const Tensor x = Tensor::Matrix(n, 3, xs);
    const double eps = rng.Uniform(0.0, 0.3);
    AttackParams params{eps, rng.Uniform(0.001, 0.2),
                        1 + static_cast<int>(rng.Index(20)),
                        rng.Bernoulli(0.5)};
    const Tensor adv = Pgd(model, x, labels, params, rng.NextU64());
    for (std::size_t j = 0; j < x.size(); ++j) {
      ASSERT_LE(std::abs(adv[j] - x[j]), eps + 1e-12);
      ASSERT_GE(adv[j], 0.0);
      ASSERT_LE(adv[j], 1.0);
    }
  }
}

TEST(Pgd, SingleStepEqualsFgsm) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    ModelConfig config;
    config.layer_widths = {2, 8, 2};
    const Model model = InitModel(config, rng.NextU64());
    std::vector<double> xs(10);
    for (double& v : xs) v = rng.Uniform();
    std::vector<int> labels = {0, 1, 1, 0, 1};
    const Tensor x = Tensor::Matrix(5, 2, xs);
    const double eps = rng.Uniform(0.01, 0.2);
    AttackParams params{eps, eps * rng.Uniform(1.0, 3.0), 1, false};
    const Tensor pgd = Pgd(model, x, labels, params, 1);
    const Tensor fgsm = Fgsm(model, x, labels, eps);
    for (std::size_t j = 0; j < x.size(); ++j) ASSERT_EQ(pgd[j], fgsm[j]);
  }
}

TEST(Pgd, LinearModelReachesBestCorner) {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> params(6);
    for (double& v : params) v = rng.Uniform(-2.0, 2.0);
    const Model model = LinearModel(2, params);
    const double eps = 0.05;
    const std::vector<double> x0 = {rng.Uniform(0.1, 0.9),
                                    rng.Uniform(0.1, 0.9)};
    const std::vector<int> label = {static_cast<int>(rng.Index(2))};
    const Tensor x = Tensor::Matrix(1, 2, x0);
    const Tensor adv =
        Pgd(model, x, label, EvaluationAttack(eps), rng.NextU64());
    double best = -1.0;
    for (double s0 : {-1.0, 1.0}) {
      for (double s1 : {-1.0, 1.0}) {
        const Tensor corner =
            Tensor::Matrix(1, 2, {x0[0] + s0 * eps, x0[1] + s1 * eps});
        best = std::max(best, MeanLoss(model, corner, label));
      }
    }
    EXPECT_NEAR(MeanLoss(model, adv, label), best, 1e-9) << trial;
  }
}

TEST(AttackParams, Presets) {
  const AttackParams train = TrainingAttack(0.08);
  EXPECT_EQ(train.steps, 10);
  EXPECT_DOUBLE_EQ(train.step_size, 0.02);
  EXPECT_TRUE(train.random_start);
  const AttackParams eval = EvaluationAttack(0.08);
  EXPECT_EQ(eval.steps, 20);
  EXPECT_DOUBLE_EQ(eval.step_size, 0.01);
}

TEST(AttackParams, ValidateRejectsBadValues) {
  EXPECT_THROW((AttackParams{-0.1, 0.01, 10, true}).Validate(), InputError);
  EXPECT_THROW((AttackParams{0.1, 0.0, 10, true}).Validate(), InputError);
  EXPECT_THROW((AttackParams{0.1, 0.01, 0, true}).Validate(), InputError);
}

TEST(RobustAccuracy, ZeroEpsilonEqualsNatural) {
  Rng rng(5);
  ModelConfig config;
  config.layer_widths = {2, 16, 2};
  const Model model = InitModel(config, 3);
  Dataset data;
  std::vector<double> xs(80);
  for (double& v : xs) v = rng.Uniform();
  data.features = Tensor::Matrix(40, 2, xs);
  for (int i = 0; i < 40; ++i) data.labels.push_back(i % 2);
  data.num_classes = 2;
  EXPECT_EQ(RobustAccuracy(model, data, AttackParams{0.0, 0.01, 20, true}, 1),
            NaturalAccuracy(model, data));
}

TEST(RobustAccuracy, ConstantModelScoresHalf) {
  const Model model = LinearModel(1, {0.0, 0.0, 1.0, 0.0});
  const Dataset data = Points({0.1, 0.3, 0.6, 0.9}, {0, 1, 0, 1});
  for (double eps : {0.0, 0.1, 0.5}) {
    EXPECT_EQ(RobustAccuracy(model, data, EvaluationAttack(eps), 4), 0.5);
  }
}

TEST(RobustAccuracy, PointsNearThresholdAreLost) {
  const Model model = ThresholdModel();
  const Dataset data =
      Points({0.1, 0.45, 0.52, 0.9, 0.62, 0.39}, {0, 0, 1, 1, 1, 0});
  EXPECT_EQ(NaturalAccuracy(model, data), 1.0);
  // Within 0.1 of the boundary: 0.45 and 0.52.
  EXPECT_DOUBLE_EQ(RobustAccuracy(model, data, EvaluationAttack(0.1), 8),
                   4.0 / 6.0);
}

TEST(RobustAccuracy, NeverAboveNatural) {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    ModelConfig config;
    config.layer_widths = {2, 8, 2};
    const Model model = InitModel(config, rng.NextU64());
    Dataset data;
    std::vector<double> xs(40);
    for (double& v : xs) v = rng.Uniform();
    data.features = Tensor::Matrix(20, 2, xs);
    for (int i = 0; i < 20; ++i) data.labels.push_back(i % 2);
    data.num_classes = 2;
    EXPECT_LE(RobustAccuracy(model, data, EvaluationAttack(0.1), trial),
              NaturalAccuracy(model, data));
  }
}

TEST(RobustAccuracy, EmptyDatasetIsInputError) {
  Dataset data;
  data.num_classes = 2;
  EXPECT_THROW(RobustAccuracy(ThresholdModel(), data, EvaluationAttack(0.1), 0),
               InputError);
}

}  // namespace
}  // namespace memlab
