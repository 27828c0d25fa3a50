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

#ifndef MEMLAB_MIA_HPP_
#define MEMLAB_MIA_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace memlab {

// Membership and true-class confidence of every (model, sample) pair.
struct ShadowEnsemble {
  std::size_t n_models = 0;
  std::size_t n_samples = 0;
  std::vector<std::uint8_t> membership;  // n_models x n_samples, row-major
  std::vector<double> confidences;       // n_models x n_samples, in [0, 1]

  bool is_member(std::size_t model, std::size_t sample) const {
    return membership[model * n_samples + sample] != 0;
  }
  double confidence(std::size_t model, std::size_t sample) const {
    return confidences[model * n_samples + sample];
  }
  void Validate() const;
};

inline constexpr double kVarianceFloor = 1e-8;
inline constexpr double kProbabilityClamp = 1e-12;

struct GaussianStats {
  double mean = 0.0;
  double var = kVarianceFloor;  // population variance, floored
  std::size_t count = 0;
};

// log(p / (1 - p)) with p clamped to [1e-12, 1 - 1e-12].
double LogitScale(double p);

// Mean and floored population variance; needs at least one value.
GaussianStats FitGaussian(std::span<const double> values);

// Gaussians of the logit-scaled confidences of `sample` over IN and OUT
// models, skipping `exclude_model` when given. Throws CoverageError unless
// both sides have at least `min_count` models.
std::pair<GaussianStats, GaussianStats> FitInOut(
    const ShadowEnsemble& ensemble, std::size_t sample,
    std::optional<std::size_t> exclude_model = std::nullopt,
    std::size_t min_count = 2);

double GaussianLogDensity(double x, const GaussianStats& stats);
// log N(phi; in) - log N(phi; out).
double LiraOnlineScore(double phi, const GaussianStats& in,
                       const GaussianStats& out);
// (phi - out.mean) / sqrt(out.var).
double LiraOfflineScore(double phi, const GaussianStats& out);
double LossAttackScore(double loss);

enum class AttackMethod { kLiraOnline, kLiraOffline, kLoss };
std::string AttackMethodName(AttackMethod method);
AttackMethod ParseAttackMethod(const std::string& name);

// Per-example or pooled variances for the LiRA Gaussians. kAuto picks
// pooled variances for ensembles under kPerExampleMinModels models.
enum class VarianceMode { kAuto, kPerExample, kGlobal };
inline constexpr std::size_t kPerExampleMinModels = 32;

// Higher score = more member-like.
struct AttackScores {
  std::vector<double> scores;
  std::vector<std::uint8_t> is_member;
  std::vector<std::size_t> sample_ids;

  std::size_t n_members() const;
  std::size_t n_nonmembers() const;
};

// Scores every sample against target model `target`, using the remaining
// models as shadows. Samples without enough shadow coverage are left out.
AttackScores ScoreTarget(const ShadowEnsemble& ensemble, std::size_t target,
                         AttackMethod method,
                         VarianceMode variance = VarianceMode::kAuto);

struct RocPoint {
  double threshold;  // predict member when score >= threshold
  double tpr;
  double fpr;
};

// One point per distinct score, thresholds descending, preceded by the
// (+inf, 0, 0) point.
std::vector<RocPoint> RocCurve(const AttackScores& scores);

struct TprAtFpr {
  double tpr = 0.0;
  double fpr = 0.0;        // achieved FPR, never above the target
  double threshold = 0.0;  // +inf when no threshold meets the target
  // False when the target is finer than 1 / (#non-members).
  bool resolvable = true;
};

// Highest TPR over thresholds whose FPR does not exceed `fpr_target`. Tied
// scores switch together.
TprAtFpr TprAtFprTarget(const AttackScores& scores, double fpr_target);

}  // namespace memlab

#endif  // MEMLAB_MIA_HPP_
