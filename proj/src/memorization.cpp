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

#include "memlab/memorization.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "memlab/errors.hpp"
#include "memlab/rng.hpp"

namespace memlab {

std::size_t MemorizationEstimate::n_missing() const {
  return static_cast<std::size_t>(
      std::count(per_sample.begin(), per_sample.end(), std::nullopt));
}

std::vector<std::uint8_t> SampleMembership(std::size_t n, double p,
                                           std::uint64_t seed) {
  if (n == 0) throw InputError("membership mask needs at least one sample");
  if (!(p > 0.0 && p < 1.0)) {
    throw InputError(fmt::format("inclusion probability {} outside (0, 1)", p));
  }
  std::vector<std::uint8_t> mask(n);
  std::uint64_t draw_seed = seed;
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng(draw_seed);
    for (auto& m : mask) m = rng.Bernoulli(p) ? 1 : 0;
    if (std::find(mask.begin(), mask.end(), 1) != mask.end()) return mask;
    draw_seed = MixSeed(seed, attempt);
    spdlog::info("empty subsample under seed {}; redrawing with seed {}", seed,
                 draw_seed);
  }
}

std::uint64_t MemberMaskSeed(std::uint64_t base_seed, std::size_t member) {
  return MixSeed(base_seed, member);
}

std::uint64_t MemberTrainSeed(std::uint64_t base_seed, std::size_t member) {
  return MixSeed(MixSeed(base_seed, member), 1);
}

MemorizationEstimate MemorizationFromEnsemble(
    std::size_t n_models, std::size_t n_samples,
    std::span<const std::uint8_t> membership,
    std::span<const std::uint8_t> correct) {
  if (membership.size() != n_models * n_samples ||
      correct.size() != n_models * n_samples) {
    throw InputError(fmt::format(
        "ensemble {}x{} has {} membership and {} correctness cells", n_models,
        n_samples, membership.size(), correct.size()));
  }
  MemorizationEstimate est;
  est.per_sample.resize(n_samples);
  est.in_counts.assign(n_samples, 0);
  est.out_counts.assign(n_samples, 0);
  std::vector<std::size_t> in_hits(n_samples, 0), out_hits(n_samples, 0);
  for (std::size_t m = 0; m < n_models; ++m) {
    for (std::size_t s = 0; s < n_samples; ++s) {
      const std::size_t cell = m * n_samples + s;
      if (membership[cell]) {
        ++est.in_counts[s];
        in_hits[s] += correct[cell] ? 1 : 0;
      } else {
        ++est.out_counts[s];
        out_hits[s] += correct[cell] ? 1 : 0;
      }
    }
  }
  for (std::size_t s = 0; s < n_samples; ++s) {
    if (est.in_counts[s] == 0 || est.out_counts[s] == 0) continue;
    est.per_sample[s] =
        static_cast<double>(in_hits[s]) / static_cast<double>(est.in_counts[s]) -
        static_cast<double>(out_hits[s]) /
            static_cast<double>(est.out_counts[s]);
  }
  return est;
}

namespace {

std::vector<std::uint8_t> Correctness(const std::vector<int>& predictions,
                                      const Dataset& data) {
  if (predictions.size() != data.size()) {
    throw InputError(fmt::format("learner returned {} predictions for {} rows",
                                 predictions.size(), data.size()));
  }
  std::vector<std::uint8_t> correct(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    correct[i] = predictions[i] == data.labels[i] ? 1 : 0;
  }
  return correct;
}

// Runs body(i) for i in [0, n) across threads and rethrows the first failure
// by index.
template <typename Body>
void ParallelFor(std::size_t n, Body body) {
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

MemorizationEstimate EstimateMemorization(const Dataset& data,
                                          const Learner& learner,
                                          std::size_t ensemble_size,
                                          double inclusion_prob,
                                          std::uint64_t base_seed) {
  if (ensemble_size < 2) {
    throw InputError(
        fmt::format("ensemble size {} below 2", ensemble_size));
  }
  data.Validate();
  const std::size_t n = data.size();
  std::vector<std::uint8_t> membership(ensemble_size * n);
  std::vector<std::uint8_t> correct(ensemble_size * n);
  ParallelFor(ensemble_size, [&](std::size_t m) {
    const auto mask =
        SampleMembership(n, inclusion_prob, MemberMaskSeed(base_seed, m));
    std::vector<std::size_t> members;
    for (std::size_t s = 0; s < n; ++s) {
      if (mask[s]) members.push_back(s);
    }
    const auto c = Correctness(
        learner(data.Subset(members), data, MemberTrainSeed(base_seed, m)),
        data);
    std::copy(mask.begin(), mask.end(), membership.begin() + m * n);
    std::copy(c.begin(), c.end(), correct.begin() + m * n);
  });
  return MemorizationFromEnsemble(ensemble_size, n, membership, correct);
}

MemorizationEstimate LeaveOneOutMemorization(const Dataset& data,
                                             const Learner& learner,
                                             std::size_t repeats,
                                             std::uint64_t base_seed,
                                             std::size_t max_samples) {
  data.Validate();
  const std::size_t n = data.size();
  if (n > max_samples) {
    throw UsageError(fmt::format(
        "leave-one-out needs {} models per repeat for {} samples (limit {}); "
        "use the subsampled estimator",
        n + 1, n, max_samples));
  }
  if (n < 2) throw InputError("leave-one-out needs at least 2 samples");
  if (repeats < 1) throw InputError("leave-one-out needs repeats >= 1");
  // diff[r * n + i] = correct(full) - correct(without i) in repeat r.
  std::vector<int> diff(repeats * n, 0);
  ParallelFor(repeats * n, [&](std::size_t job) {
    const std::size_t r = job / n;
    const std::size_t left_out = job % n;
    const std::uint64_t seed = MixSeed(base_seed, r);
    std::vector<std::size_t> keep;
    for (std::size_t s = 0; s < n; ++s) {
      if (s != left_out) keep.push_back(s);
    }
    const std::vector<std::size_t> probe{left_out};
    const Dataset query = data.Subset(probe);
    const int without =
        Correctness(learner(data.Subset(keep), query, seed), query)[0];
    diff[r * n + left_out] -= without;
  });
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto full = Correctness(learner(data, data, MixSeed(base_seed, r)),
                                  data);
    for (std::size_t s = 0; s < n; ++s) diff[r * n + s] += full[s];
  }
  MemorizationEstimate est;
  est.in_counts.assign(n, repeats);
  est.out_counts.assign(n, repeats);
  est.per_sample.resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    double total = 0.0;
    for (std::size_t r = 0; r < repeats; ++r) total += diff[r * n + s];
    est.per_sample[s] = total / static_cast<double>(repeats);
  }
  return est;
}

namespace {

std::vector<double> AverageRanks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && v[order[j]] == v[order[i]]) ++j;
    // Ranks are 1-based; the tie group [i, j) shares the mean rank.
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

}  // namespace

double Spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw InputError(fmt::format("spearman: lengths {} and {} differ",
                                 x.size(), y.size()));
  }
  if (x.size() < 2) throw InputError("spearman needs at least 2 pairs");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw NumericError("spearman: non-finite input");
    }
  }
  const auto rx = AverageRanks(x);
  const auto ry = AverageRanks(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw InputError("spearman undefined for a constant input");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::size_t BinAssign(double mem) {
  if (!(mem >= 0.0 && mem <= 1.0)) {
    throw InputError(fmt::format("memorization score {} outside [0, 1]", mem));
  }
  if (mem == 0.0) return 0;
  const double bins = static_cast<double>(kMemBins);
  auto bin = static_cast<std::size_t>(std::ceil(bins * mem));
  bin = std::clamp<std::size_t>(bin, 1, kMemBins);
  // Compare against the boundaries as doubles so k/21 lands in bin k.
  if (bin > 1 && mem <= static_cast<double>(bin - 1) / bins) --bin;
  if (bin < kMemBins && mem > static_cast<double>(bin) / bins) ++bin;
  return bin;
}

BinnedScores BinScores(const MemorizationEstimate& estimate) {
  BinnedScores out;
  out.bins.resize(estimate.size());
  for (std::size_t s = 0; s < estimate.size(); ++s) {
    if (!estimate.per_sample[s]) continue;
    double mem = *estimate.per_sample[s];
    if (mem < 0.0) {
      mem = 0.0;
      ++out.clamped;
    }
    out.bins[s] = BinAssign(mem);
  }
  return out;
}

}  // namespace memlab
