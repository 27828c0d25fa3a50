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

#ifndef MEMLAB_LAB_CONFIG_HPP_
#define MEMLAB_LAB_CONFIG_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "memlab/data_io.hpp"
#include "memlab/mia.hpp"
#include "memlab/trainer.hpp"

namespace memlab::lab {

struct DatasetSpec {
  DatasetKind kind = DatasetKind::kTwoGaussians;
  std::size_t n = 2000;
  double noise = 0.5;
  // Defaults to MixSeed(seed, 0) when unset.
  std::optional<std::uint64_t> seed;
  // When non-empty the dataset is loaded from this CSV instead.
  std::string csv;
};

struct EnsembleSpec {
  std::size_t n_models = 32;
  double inclusion_prob = 0.5;
};

enum class QueryMode { kNatural, kAdversarial };

struct MiaSpec {
  std::vector<AttackMethod> methods{AttackMethod::kLiraOnline,
                                    AttackMethod::kLiraOffline,
                                    AttackMethod::kLoss};
  std::vector<double> fpr_targets{1e-2, 1e-3};
  QueryMode query = QueryMode::kNatural;
  VarianceMode variance = VarianceMode::kAuto;
  // Attack and FPR used for the per-bin and sweep tables.
  AttackMethod report_attack = AttackMethod::kLiraOnline;
  double report_fpr = 1e-2;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  DatasetSpec dataset;
  TrainConfig train;
  EnsembleSpec ensemble;
  MiaSpec mia;

  ExperimentConfig();

  // Applies one key=value setting. Throws ConfigError for unknown keys or
  // unparsable values.
  void Set(const std::string& key, const std::string& value);
  std::string Get(const std::string& key) const;

  // Every key with its resolved value, sorted, one "key=value" per line.
  std::string Canonical() const;
  // SHA-256 of Canonical(), hex.
  std::string Hash() const;

  std::uint64_t DatasetSeed() const;
  // Throws ConfigError when values are out of range.
  void Validate() const;
};

// All recognized keys, sorted.
const std::vector<std::string>& ConfigKeys();

// "key = value" lines; '#' starts a comment. Later duplicates are errors.
ExperimentConfig ParseConfig(const std::string& text,
                             const std::string& origin = "<config>");
ExperimentConfig LoadConfig(const std::filesystem::path& path);

}  // namespace memlab::lab

#endif  // MEMLAB_LAB_CONFIG_HPP_
