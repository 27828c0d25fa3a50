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
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "memlab/errors.hpp"
#include "memlab/model.hpp"

namespace memlab {
namespace {

namespace fs = std::filesystem;

ModelConfig Widths(std::vector<std::size_t> widths) {
  ModelConfig config;
  config.layer_widths = std::move(widths);
  return config;
}

fs::path TempPath(const std::string& name) {
  return fs::temp_directory_path() /
         (name + "_" +
          ::testing::UnitTest::GetInstance()->current_test_info()->name());
}

TEST(InitModel, SameSeedIsBitIdentical) {
  const auto config = Widths({2, 8, 8, 3});
  EXPECT_EQ(InitModel(config, 11).FlatParameters(),
            InitModel(config, 11).FlatParameters());
}

TEST(InitModel, DifferentSeedsDiffer) {
  const auto config = Widths({2, 8, 3});
  EXPECT_NE(InitModel(config, 1).FlatParameters(),
            InitModel(config, 2).FlatParameters());
}

TEST(InitModel, HeUniformBoundAndZeroBias) {
  const Model model = InitModel(Widths({2, 4, 2}), 5);
  const double bound = std::sqrt(6.0 / 2.0);
  EXPECT_NEAR(bound, 1.732051, 1e-6);
  for (double w : model.layers()[0].weight.values()) {
    EXPECT_LE(std::abs(w), bound);
  }
  const double bound2 = std::sqrt(6.0 / 4.0);
  for (double w : model.layers()[1].weight.values()) {
    EXPECT_LE(std::abs(w), bound2);
  }
  for (const auto& layer : model.layers()) {
    for (double b : layer.bias.values()) EXPECT_EQ(b, 0.0);
  }
  EXPECT_EQ(model.num_parameters(), 2u * 4 + 4 + 4 * 2 + 2);
}

TEST(InitModel, RejectsDegenerateWidths) {
  EXPECT_THROW(InitModel(Widths({2}), 0), InputError);
  EXPECT_THROW(InitModel(Widths({2, 0, 2}), 0), InputError);
}

TEST(Forward, ZeroParametersGiveZeroLogits) {
  Model model = InitModel(Widths({3, 5, 2}), 0);
  std::vector<double> zeros(model.num_parameters(), 0.0);
  model.SetFlatParameters(zeros);
  const Tensor x = Tensor::Matrix(2, 3, {0.1, -4.0, 7.0, 1.0, 2.0, 3.0});
  const Tensor y = Forward(model, x);
  ASSERT_EQ(y.shape(), (std::vector<std::size_t>{2, 2}));
  for (double v : y.values()) EXPECT_EQ(v, 0.0);
}

TEST(Forward, IdentityLayerEchoesInput) {
  Model model = InitModel(Widths({3, 3}), 0);
  model.SetFlatParameters(
      std::vector<double>{1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0});
  const Tensor x = Tensor::Matrix(2, 3, {0.5, -1.5, 2.0, 0.0, 3.0, -0.25});
  const Tensor y = Forward(model, x);
  EXPECT_THAT(std::vector<double>(y.values().begin(), y.values().end()),
              ::testing::ElementsAre(0.5, -1.5, 2.0, 0.0, 3.0, -0.25));
}

TEST(Forward, HandSetTinyNet) {
  // h = relu(W1 x + b1), y = W2 h + b2
  Model model = InitModel(Widths({2, 2, 2}), 0);
  model.SetFlatParameters(std::vector<double>{
      1.0, 2.0, -1.0, 1.0,  // W1
      0.5, -3.0,            // b1
      1.0, -1.0, 2.0, 0.5,  // W2
      0.0, 1.0});           // b2
  const Tensor x = Tensor::Matrix(1, 2, {1.0, 1.0});
  // W1 x + b1 = (3.5, -3) -> relu (3.5, 0)
  // W2 h + b2 = (3.5, 8)
  const Tensor y = Forward(model, x);
  EXPECT_DOUBLE_EQ(y[0], 3.5);
  EXPECT_DOUBLE_EQ(y[1], 8.0);
  EXPECT_EQ(Predict(model, x), std::vector<int>{1});
}

TEST(Forward, DimensionMismatchIsInputError) {
  const Model model = InitModel(Widths({2, 3, 2}), 0);
  EXPECT_THROW(Forward(model, Tensor::Matrix(1, 3, {1, 2, 3})), InputError);
}

TEST(FlatParameters, AddAndSetRoundTrip) {
  Model model = InitModel(Widths({2, 3, 2}), 9);
  auto flat = model.FlatParameters();
  std::vector<double> delta(flat.size(), 0.25);
  model.AddToParameters(delta);
  for (std::size_t i = 0; i < flat.size(); ++i) {
    EXPECT_EQ(model.FlatParameters()[i], flat[i] + 0.25);
  }
  model.SetFlatParameters(flat);
  EXPECT_EQ(model.FlatParameters(), flat);
  EXPECT_THROW(model.SetFlatParameters(std::vector<double>(3, 0.0)),
               InputError);
}

class CheckpointTest : public ::testing::Test {
 protected:
  void TearDown() override { fs::remove(path_); }
  fs::path path_ = TempPath("memlab_ckpt");
};

TEST_F(CheckpointTest, RoundTripIsBitExact) {
  const Model model = InitModel(Widths({2, 32, 32, 2}), 77);
  SaveCheckpoint(model, path_);
  const Model loaded = LoadCheckpoint(path_);
  EXPECT_EQ(loaded.config().layer_widths, model.config().layer_widths);
  const auto a = model.FlatParameters();
  const auto b = loaded.FlatParameters();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(std::memcmp(&a[i], &b[i], sizeof(double)), 0) << i;
  }
}

TEST_F(CheckpointTest, BadMagic) {
  SaveCheckpoint(InitModel(Widths({2, 2}), 0), path_);
  {
    std::fstream f(path_, std::ios::in | std::ios::out | std::ios::binary);
    f.write("XXXX", 4);
  }
  try {
    LoadCheckpoint(path_);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_THAT(e.what(), ::testing::HasSubstr("bad magic"));
  }
}

TEST_F(CheckpointTest, TruncatedPayload) {
  SaveCheckpoint(InitModel(Widths({2, 4, 2}), 0), path_);
  fs::resize_file(path_, fs::file_size(path_) - 12);
  try {
    LoadCheckpoint(path_);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_THAT(e.what(), ::testing::HasSubstr("truncated payload"));
  }
}

TEST_F(CheckpointTest, MissingFileIsFileError) {
  EXPECT_THROW(LoadCheckpoint(path_), FileError);
}

}  // namespace
}  // namespace memlab
