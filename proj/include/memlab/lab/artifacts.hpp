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

#ifndef MEMLAB_LAB_ARTIFACTS_HPP_
#define MEMLAB_LAB_ARTIFACTS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "memlab/memorization.hpp"
#include "memlab/mia.hpp"

namespace memlab::lab {

std::string Sha256Hex(std::string_view bytes);
std::string Sha256File(const std::filesystem::path& path);

std::string ReadFile(const std::filesystem::path& path);
// Writes to a sibling temporary file and renames it into place.
void WriteFileAtomic(const std::filesystem::path& path,
                     std::string_view contents);

// Shortest decimal that parses back to the same double; "inf", "-inf".
std::string FormatDouble(double value);
double ParseDouble(std::string_view text, std::string_view where);
std::uint64_t ParseUnsigned(std::string_view text, std::string_view where);

// Splits a CSV file into rows of cells. Lines starting with '#' and blank
// lines are skipped; the first remaining line must equal `header`.
std::vector<std::vector<std::string>> ReadCsv(const std::filesystem::path& path,
                                              std::string_view header);

// One row per (model, sample), model-major.
struct ConfidenceRow {
  std::size_t model_id = 0;
  std::size_t sample_id = 0;
  bool is_member = false;
  int true_label = 0;
  double confidence = 0.0;
};

inline constexpr std::string_view kConfidenceHeader =
    "model_id,sample_id,is_member,true_label,confidence";
std::string ConfidenceCsvRows(const std::vector<ConfidenceRow>& rows);

// Shadow ensemble plus the per-cell correctness of each model's prediction.
struct EnsembleDump {
  ShadowEnsemble ensemble;
  std::vector<int> labels;                // per sample
  std::vector<std::uint8_t> correct;      // n_models x n_samples
};

inline constexpr std::string_view kPredictionHeader =
    "model_id,sample_id,predicted";

// Reads confidences.csv and predictions.csv; rows must form a complete
// model-major grid.
EnsembleDump ReadEnsembleDump(const std::filesystem::path& confidences,
                              const std::filesystem::path& predictions);

inline constexpr std::string_view kMemorizationHeader =
    "sample_id,mem_estimate,in_count,out_count,bin";
std::string MemorizationCsv(const MemorizationEstimate& estimate);

struct MemorizationDump {
  std::vector<std::optional<double>> mem;
  std::vector<std::optional<std::size_t>> bins;
};
MemorizationDump ReadMemorizationCsv(const std::filesystem::path& path);

}  // namespace memlab::lab

#endif  // MEMLAB_LAB_ARTIFACTS_HPP_
