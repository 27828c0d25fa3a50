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

#ifndef MEMLAB_MEMORIZATION_HPP_
#define MEMLAB_MEMORIZATION_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "memlab/dataset.hpp"

namespace memlab {

// Trains on `train` with `seed` and returns predicted labels for every row
// of `query`.
using Learner = std::function<std::vector<int>(
    const Dataset& train, const Dataset& query, std::uint64_t seed)>;

struct MemorizationEstimate {
  // IN correct fraction minus OUT correct fraction; empty when a sample has
  // no IN or no OUT model.
  std::vector<std::optional<double>> per_sample;
  std::vector<std::size_t> in_counts;
  std::vector<std::size_t> out_counts;

  std::size_t size() const { return per_sample.size(); }
  std::size_t n_missing() const;
};

// Bernoulli(p) inclusion mask of length n drawn from `seed`. An empty mask
// is redrawn from MixSeed(seed, attempt) and logged.
std::vector<std::uint8_t> SampleMembership(std::size_t n, double p,
                                           std::uint64_t seed);

// Member m of an ensemble under `base_seed` draws its mask with
// MixSeed(base_seed, m) and trains with MixSeed(MixSeed(base_seed, m), 1).
std::uint64_t MemberMaskSeed(std::uint64_t base_seed, std::size_t member);
std::uint64_t MemberTrainSeed(std::uint64_t base_seed, std::size_t member);

// Reduces an M x n membership mask and an M x n correctness mask.
MemorizationEstimate MemorizationFromEnsemble(
    std::size_t n_models, std::size_t n_samples,
    std::span<const std::uint8_t> membership,
    std::span<const std::uint8_t> correct);

MemorizationEstimate EstimateMemorization(const Dataset& data,
                                          const Learner& learner,
                                          std::size_t ensemble_size,
                                          double inclusion_prob,
                                          std::uint64_t base_seed);

inline constexpr std::size_t kLeaveOneOutMaxSamples = 64;

// Exact protocol: per repeat r, one model on all data and one per left-out
// sample, all trained with MixSeed(base_seed, r). in_counts and out_counts
// both equal `repeats`.
MemorizationEstimate LeaveOneOutMemorization(
    const Dataset& data, const Learner& learner, std::size_t repeats,
    std::uint64_t base_seed, std::size_t max_samples = kLeaveOneOutMaxSamples);

// Pearson correlation of average ranks.
double Spearman(std::span<const double> x, std::span<const double> y);

// 0 -> 0, otherwise ceil(21 * mem) with k/21 landing in bin k.
inline constexpr std::size_t kMemBins = 21;
std::size_t BinAssign(double mem);

struct BinnedScores {
  std::vector<std::optional<std::size_t>> bins;  // empty for missing scores
  std::size_t clamped = 0;                       // negatives mapped to bin 0
};
BinnedScores BinScores(const MemorizationEstimate& estimate);

}  // namespace memlab

#endif  // MEMLAB_MEMORIZATION_HPP_
