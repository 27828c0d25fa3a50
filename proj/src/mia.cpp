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

#include "memlab/mia.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

#include "memlab/errors.hpp"

namespace memlab {

void ShadowEnsemble::Validate() const {
  const std::size_t cells = n_models * n_samples;
  if (n_models == 0 || n_samples == 0) {
    throw InputError("shadow ensemble is empty");
  }
  if (membership.size() != cells || confidences.size() != cells) {
    throw InputError(fmt::format(
        "shadow ensemble {}x{} has {} membership and {} confidence cells",
        n_models, n_samples, membership.size(), confidences.size()));
  }
  for (double c : confidences) {
    if (!(c >= 0.0 && c <= 1.0)) {
      throw InputError(fmt::format("confidence {} outside [0, 1]", c));
    }
  }
}

double LogitScale(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw InputError(fmt::format("logit_scale: probability {} outside [0, 1]",
                                 p));
  }
  // 1 - p is exact for p >= 0.5, so the upper tail keeps full precision.
  if (p > 0.5) {
    const double q = std::max(1.0 - p, kProbabilityClamp);
    return std::log1p(-q) - std::log(q);
  }
  const double q = std::max(p, kProbabilityClamp);
  return std::log(q) - std::log1p(-q);
}

GaussianStats FitGaussian(std::span<const double> values) {
  if (values.empty()) throw InputError("cannot fit a Gaussian to no values");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double acc = 0.0;
  for (double v : values) acc += (v - mean) * (v - mean);
  return GaussianStats{mean, std::max(acc / n, kVarianceFloor), values.size()};
}

std::pair<GaussianStats, GaussianStats> FitInOut(
    const ShadowEnsemble& ensemble, std::size_t sample,
    std::optional<std::size_t> exclude_model, std::size_t min_count) {
  if (sample >= ensemble.n_samples) {
    throw InputError(fmt::format("sample {} outside ensemble of {} samples",
                                 sample, ensemble.n_samples));
  }
  std::vector<double> in, out;
  for (std::size_t m = 0; m < ensemble.n_models; ++m) {
    if (exclude_model && *exclude_model == m) continue;
    const double phi = LogitScale(ensemble.confidence(m, sample));
    (ensemble.is_member(m, sample) ? in : out).push_back(phi);
  }
  if (in.size() < min_count || out.size() < min_count) {
    throw CoverageError(fmt::format(
        "sample {} has {} IN and {} OUT models; need {} of each", sample,
        in.size(), out.size(), min_count));
  }
  return {FitGaussian(in), FitGaussian(out)};
}

double GaussianLogDensity(double x, const GaussianStats& stats) {
  const double d = x - stats.mean;
  return -0.5 * std::log(2.0 * std::numbers::pi * stats.var) -
         d * d / (2.0 * stats.var);
}

double LiraOnlineScore(double phi, const GaussianStats& in,
                       const GaussianStats& out) {
  return GaussianLogDensity(phi, in) - GaussianLogDensity(phi, out);
}

double LiraOfflineScore(double phi, const GaussianStats& out) {
  return (phi - out.mean) / std::sqrt(out.var);
}

double LossAttackScore(double loss) { return -loss; }

std::string AttackMethodName(AttackMethod method) {
  switch (method) {
    case AttackMethod::kLiraOnline:
      return "lira_online";
    case AttackMethod::kLiraOffline:
      return "lira_offline";
    case AttackMethod::kLoss:
      return "loss";
  }
  return "unknown";
}

AttackMethod ParseAttackMethod(const std::string& name) {
  if (name == "lira_online") return AttackMethod::kLiraOnline;
  if (name == "lira_offline") return AttackMethod::kLiraOffline;
  if (name == "loss") return AttackMethod::kLoss;
  throw InputError("unknown attack method '" + name + "'");
}

std::size_t AttackScores::n_members() const {
  return static_cast<std::size_t>(
      std::count(is_member.begin(), is_member.end(), std::uint8_t{1}));
}

std::size_t AttackScores::n_nonmembers() const {
  return is_member.size() - n_members();
}

AttackScores ScoreTarget(const ShadowEnsemble& ensemble, std::size_t target,
                         AttackMethod method, VarianceMode variance) {
  if (target >= ensemble.n_models) {
    throw InputError(fmt::format("target model {} outside ensemble of {}",
                                 target, ensemble.n_models));
  }
  AttackScores out;
  const std::size_t s_count = ensemble.n_samples;

  if (method == AttackMethod::kLoss) {
    for (std::size_t s = 0; s < s_count; ++s) {
      const double p =
          std::max(ensemble.confidence(target, s), kProbabilityClamp);
      out.scores.push_back(LossAttackScore(-std::log(p)));
      out.is_member.push_back(ensemble.is_member(target, s));
      out.sample_ids.push_back(s);
    }
    return out;
  }

  std::vector<double> phis(ensemble.confidences.size());
  for (std::size_t j = 0; j < phis.size(); ++j) {
    phis[j] = LogitScale(ensemble.confidences[j]);
  }
  const std::size_t min_in = method == AttackMethod::kLiraOnline ? 2 : 0;
  std::vector<std::optional<std::pair<GaussianStats, GaussianStats>>> fits(
      s_count);
  std::vector<double> in, out_values;
  for (std::size_t s = 0; s < s_count; ++s) {
    in.clear();
    out_values.clear();
    for (std::size_t m = 0; m < ensemble.n_models; ++m) {
      if (m == target) continue;
      const double phi = phis[m * s_count + s];
      (ensemble.is_member(m, s) ? in : out_values).push_back(phi);
    }
    if (in.size() < min_in || out_values.size() < 2) continue;
    fits[s].emplace(in.empty() ? GaussianStats{} : FitGaussian(in),
                    FitGaussian(out_values));
  }

  const bool pooled =
      variance == VarianceMode::kGlobal ||
      (variance == VarianceMode::kAuto &&
       ensemble.n_models < kPerExampleMinModels);
  if (pooled) {
    double in_sum = 0.0, out_sum = 0.0;
    std::size_t in_n = 0, out_n = 0;
    for (const auto& f : fits) {
      if (!f) continue;
      if (f->first.count > 0) {
        in_sum += f->first.var;
        ++in_n;
      }
      out_sum += f->second.var;
      ++out_n;
    }
    const double in_var =
        in_n ? std::max(in_sum / static_cast<double>(in_n), kVarianceFloor)
             : kVarianceFloor;
    const double out_var =
        out_n ? std::max(out_sum / static_cast<double>(out_n), kVarianceFloor)
              : kVarianceFloor;
    for (auto& f : fits) {
      if (!f) continue;
      f->first.var = in_var;
      f->second.var = out_var;
    }
  }

  for (std::size_t s = 0; s < s_count; ++s) {
    if (!fits[s]) continue;
    const double phi = phis[target * s_count + s];
    const auto& [in_stats, out_stats] = *fits[s];
    const double score = method == AttackMethod::kLiraOnline
                             ? LiraOnlineScore(phi, in_stats, out_stats)
                             : LiraOfflineScore(phi, out_stats);
    out.scores.push_back(score);
    out.is_member.push_back(ensemble.is_member(target, s));
    out.sample_ids.push_back(s);
  }
  return out;
}

std::vector<RocPoint> RocCurve(const AttackScores& scores) {
  const std::size_t n = scores.scores.size();
  if (scores.is_member.size() != n) {
    throw InputError("scores and membership labels differ in length");
  }
  const std::size_t pos = scores.n_members();
  const std::size_t neg = n - pos;
  if (pos == 0 || neg == 0) {
    throw InputError("ROC needs at least one member and one non-member");
  }
  for (double s : scores.scores) {
    if (!std::isfinite(s)) throw NumericError("non-finite attack score");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores.scores[a] > scores.scores[b];
  });
  std::vector<RocPoint> roc;
  roc.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < n;) {
    const double t = scores.scores[order[i]];
    while (i < n && scores.scores[order[i]] == t) {
      (scores.is_member[order[i]] ? tp : fp) += 1;
      ++i;
    }
    roc.push_back({t, static_cast<double>(tp) / static_cast<double>(pos),
                   static_cast<double>(fp) / static_cast<double>(neg)});
  }
  return roc;
}

TprAtFpr TprAtFprTarget(const AttackScores& scores, double fpr_target) {
  if (!(fpr_target > 0.0 && fpr_target < 1.0)) {
    throw InputError(fmt::format("fpr target {} outside (0, 1)", fpr_target));
  }
  const std::vector<RocPoint> roc = RocCurve(scores);
  TprAtFpr best{0.0, 0.0, roc.front().threshold, true};
  // Among admissible points of equal TPR the highest threshold wins.
  for (const RocPoint& p : roc) {
    if (p.fpr > fpr_target) break;
    if (p.tpr <= best.tpr) continue;
    best.tpr = p.tpr;
    best.fpr = p.fpr;
    best.threshold = p.threshold;
  }
  best.resolvable =
      fpr_target >= 1.0 / static_cast<double>(scores.n_nonmembers());
  return best;
}

}  // namespace memlab
