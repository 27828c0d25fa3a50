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

#include "memlab/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <fmt/format.h>

#include "memlab/errors.hpp"
#include "memlab/kernels.hpp"
#include "memlab/rng.hpp"

namespace memlab {

void ModelConfig::Validate() const {
  if (layer_widths.size() < 2) {
    throw InputError("layer_widths needs at least input and output widths");
  }
  for (std::size_t w : layer_widths) {
    if (w == 0) throw InputError("layer widths must be positive");
  }
  if (layer_widths.back() < 2) {
    throw InputError("output width (class count) must be at least 2");
  }
}

Model::Model(ModelConfig config, std::vector<Layer> layers)
    : config_(std::move(config)), layers_(std::move(layers)) {
  config_.Validate();
  if (layers_.size() + 1 != config_.layer_widths.size()) {
    throw InputError("layer count does not match layer_widths");
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const std::size_t in = config_.layer_widths[l];
    const std::size_t out = config_.layer_widths[l + 1];
    if (layers_[l].weight.shape() != std::vector<std::size_t>{out, in} ||
        layers_[l].bias.shape() != std::vector<std::size_t>{out}) {
      throw InputError(fmt::format("layer {} parameters do not chain", l));
    }
  }
}

std::size_t Model::num_parameters() const {
  std::size_t n = 0;
  for (const Layer& layer : layers_) n += layer.weight.size() + layer.bias.size();
  return n;
}

std::vector<double> Model::FlatParameters() const {
  std::vector<double> flat;
  flat.reserve(num_parameters());
  for (const Layer& layer : layers_) {
    flat.insert(flat.end(), layer.weight.values().begin(),
                layer.weight.values().end());
    flat.insert(flat.end(), layer.bias.values().begin(),
                layer.bias.values().end());
  }
  return flat;
}

std::vector<double> Model::FlatGradient() const {
  std::vector<double> flat;
  flat.reserve(num_parameters());
  auto append = [&flat](const Tensor& t) {
    if (t.has_grad()) {
      flat.insert(flat.end(), t.grad().begin(), t.grad().end());
    } else {
      flat.insert(flat.end(), t.size(), 0.0);
    }
  };
  for (const Layer& layer : layers_) {
    append(layer.weight);
    append(layer.bias);
  }
  return flat;
}

void Model::SetFlatParameters(std::span<const double> flat) {
  if (flat.size() != num_parameters()) {
    throw InputError(fmt::format("expected {} parameters, got {}",
                                 num_parameters(), flat.size()));
  }
  std::size_t pos = 0;
  for (Layer& layer : layers_) {
    for (double& v : layer.weight.values()) v = flat[pos++];
    for (double& v : layer.bias.values()) v = flat[pos++];
  }
}

void Model::AddToParameters(std::span<const double> delta) {
  if (delta.size() != num_parameters()) {
    throw InputError(fmt::format("expected {} parameter deltas, got {}",
                                 num_parameters(), delta.size()));
  }
  std::size_t pos = 0;
  for (Layer& layer : layers_) {
    for (double& v : layer.weight.values()) v += delta[pos++];
    for (double& v : layer.bias.values()) v += delta[pos++];
  }
}

void Model::ZeroGrad() {
  for (Layer& layer : layers_) {
    layer.weight.zero_grad();
    layer.bias.zero_grad();
  }
}

bool Model::AllFinite() const {
  for (const Layer& layer : layers_) {
    if (!layer.weight.AllFinite() || !layer.bias.AllFinite()) return false;
  }
  return true;
}

Model InitModel(const ModelConfig& config, std::uint64_t seed) {
  config.Validate();
  Rng rng(seed);
  std::vector<Layer> layers;
  for (std::size_t l = 0; l + 1 < config.layer_widths.size(); ++l) {
    const std::size_t in = config.layer_widths[l];
    const std::size_t out = config.layer_widths[l + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(in));
    std::vector<double> w(out * in);
    for (double& v : w) v = rng.Uniform(-bound, bound);
    layers.push_back(Layer{Tensor::Matrix(out, in, std::move(w)),
                           Tensor({out})});
  }
  return Model(config, std::move(layers));
}

Tensor Forward(const Model& model, const Tensor& batch) {
  if (batch.rank() != 2 || batch.cols() != model.input_dim()) {
    throw InputError(fmt::format("batch {} does not match input width {}",
                                 batch.ShapeString(), model.input_dim()));
  }
  const std::size_t n = batch.rows();
  Tensor current = batch;
  const auto& layers = model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::size_t k = layers[l].weight.rows();
    Tensor next({n, k});
    kernels::LinearForward(current.data(), layers[l].weight.data(),
                           layers[l].bias.data(), n, current.cols(), k,
                           next.data());
    if (l + 1 < layers.size()) {
      for (double& v : next.values()) v = v > 0.0 ? v : 0.0;
    }
    current = std::move(next);
  }
  return current;
}

std::vector<int> Predict(const Model& model, const Tensor& batch) {
  const Tensor logits = Forward(model, batch);
  std::vector<int> out(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto r = logits.row(i);
    std::size_t best = 0;
    for (std::size_t c = 1; c < r.size(); ++c) {
      if (r[c] > r[best]) best = c;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

BoundModel BindParameters(Tape& tape, Model& model) {
  BoundModel bound;
  bound.activation = model.config().activation;
  for (Layer& layer : model.layers()) {
    bound.weights.push_back(tape.Parameter(layer.weight));
    bound.biases.push_back(tape.Parameter(layer.bias));
  }
  return bound;
}

BoundModel BindConstants(Tape& tape, const Model& model) {
  BoundModel bound;
  bound.activation = model.config().activation;
  for (const Layer& layer : model.layers()) {
    bound.weights.push_back(tape.Constant(layer.weight));
    bound.biases.push_back(tape.Constant(layer.bias));
  }
  return bound;
}

Var Forward(const BoundModel& model, Var batch) {
  Var current = batch;
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    current = Linear(current, model.weights[l], model.biases[l]);
    if (l + 1 < model.weights.size()) current = Relu(current);
  }
  return current;
}

// Checkpoint layout, little-endian:
//   "DMEM" | u32 version = 1 | u32 layer count | (u32 rows, u32 cols) per layer
//   | f64 weights (row-major) then f64 biases, per layer | u32 activation tag
namespace {

constexpr char kMagic[4] = {'D', 'M', 'E', 'M'};
constexpr std::uint32_t kVersion = 1;
// Guards against absurd allocations from corrupted headers.
constexpr std::uint32_t kMaxDim = 1u << 24;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <typename T>
void WriteRaw(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::vector<char> bytes) : bytes_(std::move(bytes)) {}

  template <typename T>
  T Read(const std::string& field) {
    if (pos_ + sizeof(T) > bytes_.size()) {
      throw FormatError("checkpoint: truncated payload (" + field + ")");
    }
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  void ReadDoubles(std::span<double> out, const std::string& field) {
    const std::size_t bytes = out.size() * sizeof(double);
    if (pos_ + bytes > bytes_.size()) {
      throw FormatError("checkpoint: truncated payload (" + field + ")");
    }
    std::memcpy(out.data(), bytes_.data() + pos_, bytes);
    pos_ += bytes;
  }

  bool AtEnd() const { return pos_ == bytes_.size(); }

 private:
  std::vector<char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void SaveCheckpoint(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FileError("cannot open " + path.string() + " for writing");
  out.write(kMagic, 4);
  WriteRaw<std::uint32_t>(out, kVersion);
  WriteRaw<std::uint32_t>(out,
                          static_cast<std::uint32_t>(model.layers().size()));
  for (const Layer& layer : model.layers()) {
    WriteRaw<std::uint32_t>(out, static_cast<std::uint32_t>(layer.weight.rows()));
    WriteRaw<std::uint32_t>(out, static_cast<std::uint32_t>(layer.weight.cols()));
  }
  for (const Layer& layer : model.layers()) {
    for (double v : layer.weight.values()) WriteRaw<double>(out, v);
    for (double v : layer.bias.values()) WriteRaw<double>(out, v);
  }
  WriteRaw<std::uint32_t>(out,
                          static_cast<std::uint32_t>(model.config().activation));
  if (!out) throw FileError("failed writing " + path.string());
}

Model LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open " + path.string());
  Reader reader(std::vector<char>(std::istreambuf_iterator<char>(in), {}));

  char magic[4];
  for (char& c : magic) c = reader.Read<char>("magic");
  if (std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError("checkpoint: bad magic");
  }
  const auto version = reader.Read<std::uint32_t>("version");
  if (version != kVersion) {
    throw FormatError(fmt::format("checkpoint: version mismatch (file {}, "
                                  "expected {})",
                                  version, kVersion));
  }
  const auto layer_count = reader.Read<std::uint32_t>("layer count");
  if (layer_count == 0 || layer_count > 1024) {
    throw FormatError(fmt::format("checkpoint: bad layer count {}",
                                  layer_count));
  }
  ModelConfig config;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> dims;
  for (std::uint32_t l = 0; l < layer_count; ++l) {
    const auto rows = reader.Read<std::uint32_t>(fmt::format("layer {} rows", l));
    const auto cols = reader.Read<std::uint32_t>(fmt::format("layer {} cols", l));
    if (rows == 0 || cols == 0 || rows > kMaxDim || cols > kMaxDim) {
      throw FormatError(fmt::format("checkpoint: bad shape {}x{} for layer {}",
                                    rows, cols, l));
    }
    if (l == 0) {
      config.layer_widths.push_back(cols);
    } else if (cols != dims.back().first) {
      throw FormatError(fmt::format("checkpoint: layer {} cols {} do not "
                                    "chain with previous rows {}",
                                    l, cols, dims.back().first));
    }
    config.layer_widths.push_back(rows);
    dims.emplace_back(rows, cols);
  }
  std::vector<Layer> layers;
  for (std::uint32_t l = 0; l < layer_count; ++l) {
    const auto [rows, cols] = dims[l];
    std::vector<double> w(static_cast<std::size_t>(rows) * cols);
    reader.ReadDoubles(w, fmt::format("layer {} weights", l));
    std::vector<double> b(rows);
    reader.ReadDoubles(b, fmt::format("layer {} biases", l));
    layers.push_back(Layer{Tensor::Matrix(rows, cols, std::move(w)),
                           Tensor::Vector(std::move(b))});
  }
  const auto tag = reader.Read<std::uint32_t>("activation tag");
  if (tag != static_cast<std::uint32_t>(Activation::kRelu)) {
    throw FormatError(fmt::format("checkpoint: unknown activation tag {}", tag));
  }
  if (!reader.AtEnd()) throw FormatError("checkpoint: trailing bytes");
  config.activation = Activation::kRelu;
  Model model(std::move(config), std::move(layers));
  if (!model.AllFinite()) throw FormatError("checkpoint: non-finite parameter");
  return model;
}

}  // namespace memlab
