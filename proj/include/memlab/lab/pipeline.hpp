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

#ifndef MEMLAB_LAB_PIPELINE_HPP_
#define MEMLAB_LAB_PIPELINE_HPP_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "memlab/dataset.hpp"
#include "memlab/lab/config.hpp"

namespace memlab::lab {

namespace fs = std::filesystem;

// Generated from dataset.* or loaded from dataset.csv. Throws ConfigError
// when the model input or output width does not fit the data.
Dataset BuildDataset(const ExperimentConfig& config);

// dir/dataset.csv and dir/config.txt.
void RunGenData(const ExperimentConfig& config, const fs::path& dir);

// One model on the whole dataset: model.ckpt, history.csv, metrics.csv.
void RunTrain(const ExperimentConfig& config, const fs::path& dir);

struct ShadowSummary {
  std::size_t trained = 0;
  std::size_t skipped = 0;  // completed by an earlier run
};

// Trains ensemble.n_models members on Bernoulli(inclusion_prob) splits with
// up to `workers` in flight, then merges per-model files in index order:
//
//   config.txt, dataset.csv, membership.csv, confidences.csv,
//   predictions.csv, metrics.csv, manifest.json,
//   models/model_NNN.{ckpt,history.csv,...}
//
// Completed members of an earlier run with the same config are reused; a
// directory holding a different config raises ConflictError.
ShadowSummary RunShadow(const ExperimentConfig& config, const fs::path& dir,
                        int workers);

// Leave-one-model-out attacks with every configured method and FPR target:
// attack_report.csv (aggregate), attack_targets.csv (per target) and
// scores.csv. Verifies manifest checksums first.
void RunAttack(const fs::path& dir, int workers);

// memorization.csv from the ensemble's membership and predictions.
void RunMemorize(const fs::path& dir);

// methods.csv for every run; bins.csv for runs with a memorization dump
// (`mem_dump` overrides the run's own); lambda_sweep.csv and
// epsilon_sweep.csv when runs differ in those settings.
void RunReport(const std::vector<fs::path>& runs, const fs::path& out,
               const std::optional<fs::path>& mem_dump = std::nullopt);

// Runs shadow, attack and memorize under out/<param>=<value> for every value,
// then the report over all of them into out/report.
void RunSweep(const ExperimentConfig& config, const std::string& param,
              const std::vector<std::string>& values, const fs::path& out,
              int workers);

// Process exit code for an error: 2 config/usage, 3 data/format, 4 runtime.
int ExitCodeFor(const std::exception& error);

}  // namespace memlab::lab

#endif  // MEMLAB_LAB_PIPELINE_HPP_
