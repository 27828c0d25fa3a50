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

#ifndef MEMLAB_MODEL_HPP_
#define MEMLAB_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "memlab/autodiff.hpp"
#include "memlab/tensor.hpp"

namespace memlab {

enum class Activation : std::uint32_t { kRelu = 0 };
enum class InitScheme { kHeUniform };

struct ModelConfig {
  // Input dimension, hidden widths..., number of classes.
  std::vector<std::size_t> layer_widths;
  Activation activation = Activation::kRelu;
  InitScheme init_scheme = InitScheme::kHeUniform;

  void Validate() const;
};

// Fully connected layer; weight is out x in.
struct Layer {
  Tensor weight;
  Tensor bias;
};

// Feed-forward classifier: hidden layers use the activation, the output
// layer is linear.
class Model {
 public:
  Model() = default;
  Model(ModelConfig config, std::vector<Layer> layers);

  const ModelConfig& config() const { return config_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }

  std::size_t input_dim() const { return config_.layer_widths.front(); }
  std::size_t num_classes() const { return config_.layer_widths.back(); }
  std::size_t num_parameters() const;

  // Parameters flattened in checkpoint order: per layer, weight (row-major)
  // then bias.
  std::vector<double> FlatParameters() const;
  std::vector<double> FlatGradient() const;
  void SetFlatParameters(std::span<const double> flat);
  // theta += delta, same order as FlatParameters.
  void AddToParameters(std::span<const double> delta);
  void ZeroGrad();

  bool AllFinite() const;

 private:
  ModelConfig config_;
  std::vector<Layer> layers_;
};

// He-uniform weights in +-sqrt(6 / fan_in), zero biases. Determined by
// (config, seed) alone.
Model InitModel(const ModelConfig& config, std::uint64_t seed);

// Logits for an n x input_dim batch, without recording a tape.
Tensor Forward(const Model& model, const Tensor& batch);
std::vector<int> Predict(const Model& model, const Tensor& batch);

// Model parameters recorded on a tape.
struct BoundModel {
  std::vector<Var> weights;
  std::vector<Var> biases;
  Activation activation = Activation::kRelu;
};

// Binds parameters so Backward fills their grad slots.
BoundModel BindParameters(Tape& tape, Model& model);
// Records parameters as constants, for gradients with respect to inputs only.
BoundModel BindConstants(Tape& tape, const Model& model);
Var Forward(const BoundModel& model, Var batch);

void SaveCheckpoint(const Model& model, const std::filesystem::path& path);
Model LoadCheckpoint(const std::filesystem::path& path);

}  // namespace memlab

#endif  // MEMLAB_MODEL_HPP_
