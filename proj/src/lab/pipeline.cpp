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

#include "memlab/lab/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "json.hpp"
#include "memlab/attacks.hpp"
#include "memlab/data_io.hpp"
#include "memlab/errors.hpp"
#include "memlab/lab/artifacts.hpp"
#include "memlab/losses.hpp"
#include "memlab/memorization.hpp"
#include "memlab/mia.hpp"
#include "memlab/model.hpp"
#include "memlab/rng.hpp"
#include "memlab/trainer.hpp"

namespace memlab::lab {
namespace {

using json = nlohmann::ordered_json;

constexpr char kConfigFile[] = "config.txt";
constexpr char kDatasetFile[] = "dataset.csv";
constexpr char kMembershipFile[] = "membership.csv";
constexpr char kConfidenceFile[] = "confidences.csv";
constexpr char kPredictionFile[] = "predictions.csv";
constexpr char kMetricsFile[] = "metrics.csv";
constexpr char kManifestFile[] = "manifest.json";
constexpr char kAttackReportFile[] = "attack_report.csv";
constexpr char kAttackTargetsFile[] = "attack_targets.csv";
constexpr char kScoresFile[] = "scores.csv";
constexpr char kMemorizationFile[] = "memorization.csv";

constexpr std::string_view kMetricsHeader =
    "model_id,n_members,train_acc,test_acc,rob_acc,final_psi";
constexpr std::string_view kAttackReportHeader =
    "attack_name,fpr_target,tpr,threshold,n_members,n_nonmembers,tpr_std,"
    "n_targets,flag";
constexpr std::string_view kAttackTargetsHeader =
    "attack_name,target_model,fpr_target,tpr,fpr,threshold,n_members,"
    "n_nonmembers,flag";
constexpr std::string_view kScoresHeader =
    "attack_name,target_model,sample_id,is_member,score";

// Ensemble member m draws its split and training seed from this base.
std::uint64_t EnsembleBase(const ExperimentConfig& config) {
  return MixSeed(config.seed, 1);
}

std::string DatasetCsv(const Dataset& data) {
  std::ostringstream out;
  WriteDatasetCsv(data, out);
  return out.str();
}

std::string ModelStem(std::size_t m) { return fmt::format("model_{:03d}", m); }

void EnsureDir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw FileError(fmt::format("cannot create {}: {}", dir.string(),
                                      ec.message()));
}

// Writes config.txt, or checks that an existing one matches.
void ClaimDirectory(const ExperimentConfig& config, const fs::path& dir) {
  EnsureDir(dir);
  const fs::path path = dir / kConfigFile;
  const std::string canonical = config.Canonical();
  if (fs::exists(path)) {
    const std::string existing = ReadFile(path);
    if (existing != canonical) {
      throw ConflictError(fmt::format(
          "{} holds a run with config hash {}, not {}; refusing to mix runs",
          dir.string(), Sha256Hex(existing), config.Hash()));
    }
    return;
  }
  WriteFileAtomic(path, canonical);
}

void WriteIfChanged(const fs::path& path, const std::string& contents) {
  if (fs::exists(path) && ReadFile(path) == contents) return;
  WriteFileAtomic(path, contents);
}

ExperimentConfig LoadRunConfig(const fs::path& dir) {
  const fs::path path = dir / kConfigFile;
  if (!fs::exists(path)) {
    throw FileError(fmt::format("{} is not a run directory (no {})",
                                dir.string(), kConfigFile));
  }
  return LoadConfig(path);
}

double Mean(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) /
         static_cast<double>(v.size());
}

// Sample standard deviation; empty below two values.
std::string StdField(const std::vector<double>& v) {
  if (v.size() < 2) return "";
  const double mean = Mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return FormatDouble(std::sqrt(acc / static_cast<double>(v.size() - 1)));
}

template <typename Body>
void ParallelFor(std::size_t n, int workers, Body body) {
  std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic) num_threads(std::max(workers, 1))
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

// ---- manifest -------------------------------------------------------------

void WriteManifest(const ExperimentConfig& config, const fs::path& dir,
                   std::size_t n_samples) {
  json manifest;
  manifest["config_hash"] = config.Hash();
  manifest["seed"] = config.seed;
  manifest["dataset_seed"] = config.DatasetSeed();
  manifest["n_models"] = config.ensemble.n_models;
  manifest["n_samples"] = n_samples;
  json members = json::array();
  const std::uint64_t base = EnsembleBase(config);
  for (std::size_t m = 0; m < config.ensemble.n_models; ++m) {
    members.push_back({{"model", m},
                       {"mask_seed", MemberMaskSeed(base, m)},
                       {"train_seed", MemberTrainSeed(base, m)}});
  }
  manifest["members"] = members;
  json files = json::object();
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name == kManifestFile || name.ends_with(".tmp")) continue;
    names.push_back(name);
  }
  const fs::path models = dir / "models";
  if (fs::exists(models)) {
    for (const auto& entry : fs::directory_iterator(models)) {
      const std::string name = entry.path().filename().string();
      if (name.ends_with(".ckpt")) names.push_back("models/" + name);
    }
  }
  std::sort(names.begin(), names.end());
  for (const auto& name : names) files[name] = Sha256File(dir / name);
  manifest["files"] = files;
  WriteFileAtomic(dir / kManifestFile, manifest.dump(2) + "\n");
}

json ReadManifest(const fs::path& dir) {
  const fs::path path = dir / kManifestFile;
  if (!fs::exists(path)) {
    throw FileError(fmt::format("{}: missing {}; run shadow first",
                                dir.string(), kManifestFile));
  }
  try {
    return json::parse(ReadFile(path));
  } catch (const json::exception& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void VerifyManifest(const ExperimentConfig& config, const fs::path& dir) {
  const json manifest = ReadManifest(dir);
  if (manifest.value("config_hash", "") != config.Hash()) {
    throw ConflictError(fmt::format("{}: manifest config hash differs from {}",
                                    dir.string(), kConfigFile));
  }
  for (const auto& [name, digest] : manifest.at("files").items()) {
    const fs::path path = dir / name;
    if (!fs::exists(path)) {
      throw FileError(fmt::format("{}: listed in manifest but missing",
                                  path.string()));
    }
    if (Sha256File(path) != digest.get<std::string>()) {
      throw FormatError(
          fmt::format("{}: checksum does not match manifest", path.string()));
    }
  }
}

// ---- shadow ---------------------------------------------------------------

fs::path MemberFile(const fs::path& dir, std::size_t m,
                    const std::string& suffix) {
  return dir / "models" / (ModelStem(m) + suffix);
}

void TrainMember(const ExperimentConfig& config, const Dataset& data,
                 const fs::path& dir, std::size_t m) {
  const std::uint64_t base = EnsembleBase(config);
  const std::size_t n = data.size();
  const auto mask = SampleMembership(n, config.ensemble.inclusion_prob,
                                     MemberMaskSeed(base, m));
  std::vector<std::size_t> members, nonmembers;
  for (std::size_t s = 0; s < n; ++s) {
    (mask[s] ? members : nonmembers).push_back(s);
  }
  TrainConfig train = config.train;
  train.seed = MemberTrainSeed(base, m);
  const TrainResult result = Train(train, data.Subset(members));

  Tensor query = data.features;
  if (config.mia.query == QueryMode::kAdversarial) {
    query = Pgd(result.model, data.features, data.labels, train.eval_attack,
                MixSeed(train.seed, 7));
  }
  const Tensor probs = Softmax(Forward(result.model, query));
  const std::vector<int> predicted = Predict(result.model, query);

  std::string conf, pred, membership;
  std::vector<ConfidenceRow> rows;
  for (std::size_t s = 0; s < n; ++s) {
    rows.push_back({m, s, mask[s] != 0, data.labels[s],
                    probs.at(s, static_cast<std::size_t>(data.labels[s]))});
    pred += fmt::format("{},{},{}\n", m, s, predicted[s]);
    membership += mask[s] ? '1' : '0';
  }
  conf = ConfidenceCsvRows(rows);

  const double train_acc = NaturalAccuracy(result.model, data.Subset(members));
  std::string test_acc, rob_acc;
  if (!nonmembers.empty()) {
    const Dataset held_out = data.Subset(nonmembers);
    test_acc = FormatDouble(NaturalAccuracy(result.model, held_out));
    rob_acc = FormatDouble(RobustAccuracy(result.model, held_out,
                                          train.eval_attack,
                                          MixSeed(train.seed, 5)));
  }
  const std::string metrics = fmt::format(
      "{},{},{},{},{},{}\n", m, members.size(), FormatDouble(train_acc),
      test_acc, rob_acc, FormatDouble(result.history.epochs.back().psi));

  std::ostringstream history;
  WriteHistoryCsv(result.history, history);
  SaveCheckpoint(result.model, MemberFile(dir, m, ".ckpt"));
  WriteFileAtomic(MemberFile(dir, m, ".history.csv"), history.str());
  WriteFileAtomic(MemberFile(dir, m, ".conf.part"), conf);
  WriteFileAtomic(MemberFile(dir, m, ".pred.part"), pred);
  WriteFileAtomic(MemberFile(dir, m, ".metrics.part"), metrics);
  WriteFileAtomic(MemberFile(dir, m, ".mask.part"),
                  fmt::format("{},{}\n", m, membership));
  // Written last: marks the member complete for resumption.
  WriteFileAtomic(MemberFile(dir, m, ".done"), config.Hash() + "\n");
}

bool MemberDone(const ExperimentConfig& config, const fs::path& dir,
                std::size_t m) {
  const fs::path done = MemberFile(dir, m, ".done");
  return fs::exists(done) && ReadFile(done) == config.Hash() + "\n";
}

}  // namespace

Dataset BuildDataset(const ExperimentConfig& config) {
  Dataset data;
  if (!config.dataset.csv.empty()) {
    data = LoadCsv(config.dataset.csv);
  } else {
    data = GenerateDataset(config.dataset.kind, config.dataset.n,
                           config.dataset.noise, config.DatasetSeed());
  }
  const auto& widths = config.train.model.layer_widths;
  if (widths.front() != data.dim()) {
    throw ConfigError(fmt::format(
        "model.layer_widths starts with {} but the data has {} features",
        widths.front(), data.dim()));
  }
  if (widths.back() < data.num_classes) {
    throw ConfigError(fmt::format(
        "model.layer_widths ends with {} but the data has {} classes",
        widths.back(), data.num_classes));
  }
  data.num_classes = widths.back();
  return data;
}

void RunGenData(const ExperimentConfig& config, const fs::path& dir) {
  config.Validate();
  const Dataset data = BuildDataset(config);
  EnsureDir(dir);
  WriteFileAtomic(dir / kDatasetFile, DatasetCsv(data));
  WriteFileAtomic(dir / kConfigFile, config.Canonical());
  spdlog::info("wrote {} samples to {}", data.size(),
               (dir / kDatasetFile).string());
}

void RunTrain(const ExperimentConfig& config, const fs::path& dir) {
  config.Validate();
  const Dataset data = BuildDataset(config);
  EnsureDir(dir);
  TrainConfig train = config.train;
  train.seed = MixSeed(config.seed, 2);
  const TrainResult result = Train(train, data, [](const StepInfo& info,
                                                   const Model&) {
    spdlog::debug("epoch {} step {} loss {}", info.epoch, info.step,
                  info.total_loss);
  });
  SaveCheckpoint(result.model, dir / "model.ckpt");
  std::ostringstream history;
  WriteHistoryCsv(result.history, history);
  WriteFileAtomic(dir / "history.csv", history.str());
  const double nat = NaturalAccuracy(result.model, data);
  const double rob = RobustAccuracy(result.model, data, train.eval_attack,
                                    MixSeed(train.seed, 5));
  WriteFileAtomic(dir / kMetricsFile,
                  fmt::format("nat_acc,rob_acc,final_psi\n{},{},{}\n",
                              FormatDouble(nat), FormatDouble(rob),
                              FormatDouble(result.history.epochs.back().psi)));
  WriteFileAtomic(dir / kConfigFile, config.Canonical());
  spdlog::info("trained {} epochs: natural acc {:.4f}, robust acc {:.4f}",
               train.epochs, nat, rob);
}

ShadowSummary RunShadow(const ExperimentConfig& config, const fs::path& dir,
                        int workers) {
  config.Validate();
  const Dataset data = BuildDataset(config);
  ClaimDirectory(config, dir);
  EnsureDir(dir / "models");
  WriteIfChanged(dir / kDatasetFile, DatasetCsv(data));

  const std::size_t n_models = config.ensemble.n_models;
  std::vector<std::size_t> pending;
  for (std::size_t m = 0; m < n_models; ++m) {
    if (!MemberDone(config, dir, m)) pending.push_back(m);
  }
  ShadowSummary summary{pending.size(), n_models - pending.size()};
  if (summary.skipped > 0) {
    spdlog::info("{}: reusing {} completed models", dir.string(),
                 summary.skipped);
  }
  ParallelFor(pending.size(), workers, [&](std::size_t i) {
    TrainMember(config, data, dir, pending[i]);
    spdlog::info("{}: model {} done", dir.string(), pending[i]);
  });

  std::string membership = "model_id,mask\n";
  std::string confidences = std::string(kConfidenceHeader) + "\n";
  std::string predictions = std::string(kPredictionHeader) + "\n";
  std::string metrics = std::string(kMetricsHeader) + "\n";
  for (std::size_t m = 0; m < n_models; ++m) {
    membership += ReadFile(MemberFile(dir, m, ".mask.part"));
    confidences += ReadFile(MemberFile(dir, m, ".conf.part"));
    predictions += ReadFile(MemberFile(dir, m, ".pred.part"));
    metrics += ReadFile(MemberFile(dir, m, ".metrics.part"));
  }
  WriteFileAtomic(dir / kMembershipFile, membership);
  WriteFileAtomic(dir / kConfidenceFile, confidences);
  WriteFileAtomic(dir / kPredictionFile, predictions);
  WriteFileAtomic(dir / kMetricsFile, metrics);
  WriteManifest(config, dir, data.size());
  return summary;
}

void RunAttack(const fs::path& dir, int workers) {
  const ExperimentConfig config = LoadRunConfig(dir);
  VerifyManifest(config, dir);
  const EnsembleDump dump =
      ReadEnsembleDump(dir / kConfidenceFile, dir / kPredictionFile);
  const ShadowEnsemble& ensemble = dump.ensemble;
  const std::size_t n_models = ensemble.n_models;

  std::string report = std::string(kAttackReportHeader) + "\n";
  std::string targets = std::string(kAttackTargetsHeader) + "\n";
  std::string scores_csv = std::string(kScoresHeader) + "\n";
  for (AttackMethod method : config.mia.methods) {
    const std::string name = AttackMethodName(method);
    std::vector<AttackScores> scores(n_models);
    ParallelFor(n_models, workers, [&](std::size_t m) {
      scores[m] = ScoreTarget(ensemble, m, method, config.mia.variance);
    });
    for (std::size_t m = 0; m < n_models; ++m) {
      const auto& sc = scores[m];
      for (std::size_t i = 0; i < sc.scores.size(); ++i) {
        scores_csv += fmt::format("{},{},{},{},{}\n", name, m, sc.sample_ids[i],
                                  sc.is_member[i], FormatDouble(sc.scores[i]));
      }
    }
    for (double fpr : config.mia.fpr_targets) {
      std::vector<double> tprs, thresholds;
      std::size_t min_members = std::numeric_limits<std::size_t>::max();
      std::size_t min_nonmembers = min_members;
      bool unresolvable = false;
      for (std::size_t m = 0; m < n_models; ++m) {
        const auto& sc = scores[m];
        if (sc.n_members() == 0 || sc.n_nonmembers() == 0) {
          targets += fmt::format("{},{},{},,,,{},{},insufficient_coverage\n",
                                 name, m, FormatDouble(fpr), sc.n_members(),
                                 sc.n_nonmembers());
          continue;
        }
        const TprAtFpr r = TprAtFprTarget(sc, fpr);
        tprs.push_back(r.tpr);
        thresholds.push_back(r.threshold);
        min_members = std::min(min_members, sc.n_members());
        min_nonmembers = std::min(min_nonmembers, sc.n_nonmembers());
        unresolvable |= !r.resolvable;
        targets += fmt::format(
            "{},{},{},{},{},{},{},{},{}\n", name, m, FormatDouble(fpr),
            FormatDouble(r.tpr), FormatDouble(r.fpr), FormatDouble(r.threshold),
            sc.n_members(), sc.n_nonmembers(),
            r.resolvable ? "" : "unresolvable");
      }
      if (tprs.empty()) {
        spdlog::warn("{}: no target has coverage for {}", dir.string(), name);
        report += fmt::format("{},{},,,0,0,,0,insufficient_coverage\n", name,
                              FormatDouble(fpr));
        continue;
      }
      report += fmt::format("{},{},{},{},{},{},{},{},{}\n", name,
                            FormatDouble(fpr), FormatDouble(Mean(tprs)),
                            FormatDouble(Mean(thresholds)), min_members,
                            min_nonmembers, StdField(tprs), tprs.size(),
                            unresolvable ? "unresolvable" : "");
    }
  }
  WriteFileAtomic(dir / kAttackTargetsFile, targets);
  WriteFileAtomic(dir / kScoresFile, scores_csv);
  WriteFileAtomic(dir / kAttackReportFile, report);
  WriteManifest(config, dir, ensemble.n_samples);
}

void RunMemorize(const fs::path& dir) {
  const ExperimentConfig config = LoadRunConfig(dir);
  VerifyManifest(config, dir);
  const EnsembleDump dump =
      ReadEnsembleDump(dir / kConfidenceFile, dir / kPredictionFile);
  const MemorizationEstimate est = MemorizationFromEnsemble(
      dump.ensemble.n_models, dump.ensemble.n_samples,
      dump.ensemble.membership, dump.correct);
  const BinnedScores binned = BinScores(est);
  WriteFileAtomic(dir / kMemorizationFile, MemorizationCsv(est));
  spdlog::info("{}: memorization for {} samples, {} missing, {} negative "
               "estimates clamped to bin 0",
               dir.string(), est.size(), est.n_missing(), binned.clamped);
  WriteManifest(config, dir, dump.ensemble.n_samples);
}

namespace {

// ---- report ---------------------------------------------------------------

struct ModelMetrics {
  std::vector<double> test_acc, rob_acc, final_psi;
};

ModelMetrics ReadMetrics(const fs::path& dir) {
  ModelMetrics out;
  const auto rows = ReadCsv(dir / kMetricsFile, kMetricsHeader);
  for (const auto& row : rows) {
    if (row.size() != 6) {
      throw FormatError((dir / kMetricsFile).string() + ": bad row");
    }
    const std::string where = (dir / kMetricsFile).string();
    if (!row[3].empty()) out.test_acc.push_back(ParseDouble(row[3], where));
    if (!row[4].empty()) out.rob_acc.push_back(ParseDouble(row[4], where));
    out.final_psi.push_back(ParseDouble(row[5], where));
  }
  return out;
}

struct AttackRow {
  std::string attack;
  std::string fpr;  // as written, so it echoes exactly
  double fpr_value = 0.0;
  std::string tpr, tpr_std, n_targets, flag;
};

std::vector<AttackRow> ReadAttackReport(const fs::path& dir) {
  const fs::path path = dir / kAttackReportFile;
  if (!fs::exists(path)) {
    throw FileError(fmt::format("{}: missing; run attack first", path.string()));
  }
  std::vector<AttackRow> out;
  for (const auto& row : ReadCsv(path, kAttackReportHeader)) {
    if (row.size() != 9) throw FormatError(path.string() + ": bad row");
    out.push_back({row[0], row[1], ParseDouble(row[1], path.string()), row[2],
                   row[6], row[7], row[8]});
  }
  return out;
}

std::string HeaderComment(const std::vector<fs::path>& runs,
                          const std::vector<ExperimentConfig>& configs) {
  std::string out;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    out += fmt::format("# run={} config_hash={} seed={}\n",
                       runs[r].filename().string(), configs[r].Hash(),
                       configs[r].seed);
  }
  return out;
}

// Pooled bin TPR at each target's threshold for `fpr`, and pooled accuracy
// of OUT models on the bin's samples.
std::string BinTable(const fs::path& run, const ExperimentConfig& config,
                     const MemorizationDump& mem) {
  const EnsembleDump dump =
      ReadEnsembleDump(run / kConfidenceFile, run / kPredictionFile);
  const std::size_t n_samples = dump.ensemble.n_samples;
  const std::size_t n_models = dump.ensemble.n_models;
  if (mem.bins.size() != n_samples) {
    throw ConflictError(fmt::format(
        "memorization dump covers {} samples but {} has {}", mem.bins.size(),
        run.string(), n_samples));
  }
  const std::string attack = AttackMethodName(config.mia.report_attack);
  const double fpr = config.mia.report_fpr;

  std::vector<double> threshold(n_models,
                                std::numeric_limits<double>::quiet_NaN());
  for (const auto& row :
       ReadCsv(run / kAttackTargetsFile, kAttackTargetsHeader)) {
    const std::string where = (run / kAttackTargetsFile).string();
    if (row.size() != 9) throw FormatError(where + ": bad row");
    if (row[0] != attack || ParseDouble(row[2], where) != fpr) continue;
    if (row[5].empty()) continue;
    threshold[ParseUnsigned(row[1], where)] = ParseDouble(row[5], where);
  }
  if (std::all_of(threshold.begin(), threshold.end(),
                  [](double t) { return std::isnan(t); })) {
    spdlog::warn("{}: no {} result at fpr {}; skipping its bin table",
                 run.string(), attack, FormatDouble(fpr));
    return "";
  }

  std::vector<std::size_t> bin_samples(kMemBins + 1, 0);
  std::vector<std::size_t> bin_members(kMemBins + 1, 0), bin_hits(kMemBins + 1, 0);
  std::vector<std::size_t> bin_out(kMemBins + 1, 0), bin_correct(kMemBins + 1, 0);
  for (std::size_t s = 0; s < n_samples; ++s) {
    if (mem.bins[s]) ++bin_samples[*mem.bins[s]];
  }
  for (const auto& row : ReadCsv(run / kScoresFile, kScoresHeader)) {
    const std::string where = (run / kScoresFile).string();
    if (row.size() != 5) throw FormatError(where + ": bad row");
    if (row[0] != attack) continue;
    const std::size_t m = ParseUnsigned(row[1], where);
    const std::size_t s = ParseUnsigned(row[2], where);
    if (m >= n_models || s >= n_samples || !mem.bins[s]) continue;
    if (std::isnan(threshold[m])) continue;
    if (row[3] != "1") continue;
    ++bin_members[*mem.bins[s]];
    if (ParseDouble(row[4], where) >= threshold[m]) ++bin_hits[*mem.bins[s]];
  }
  for (std::size_t m = 0; m < n_models; ++m) {
    for (std::size_t s = 0; s < n_samples; ++s) {
      if (!mem.bins[s] || dump.ensemble.is_member(m, s)) continue;
      ++bin_out[*mem.bins[s]];
      bin_correct[*mem.bins[s]] += dump.correct[m * n_samples + s];
    }
  }
  std::string out;
  for (std::size_t b = 0; b <= kMemBins; ++b) {
    if (bin_samples[b] == 0) continue;
    out += fmt::format(
        "{},{},{},{},{},{},{}\n", run.filename().string(), b, bin_samples[b],
        attack,
        bin_members[b] ? FormatDouble(static_cast<double>(bin_hits[b]) /
                                      static_cast<double>(bin_members[b]))
                       : "",
        FormatDouble(fpr),
        bin_out[b] ? FormatDouble(static_cast<double>(bin_correct[b]) /
                                  static_cast<double>(bin_out[b]))
                   : "");
  }
  return out;
}

std::string SweepTable(const std::string& key,
                       const std::vector<fs::path>& runs,
                       const std::vector<ExperimentConfig>& configs,
                       const std::vector<ModelMetrics>& metrics,
                       const std::vector<std::vector<AttackRow>>& attacks) {
  std::string out = fmt::format(
      "{},train_method,attack_name,fpr_target,tpr,tpr_std,nat_acc,rob_acc,"
      "final_psi,run\n",
      key.substr(key.find('.') + 1));
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto& c = configs[r];
    const std::string attack = AttackMethodName(c.mia.report_attack);
    for (const auto& row : attacks[r]) {
      if (row.attack != attack || row.fpr_value != c.mia.report_fpr) continue;
      out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", c.Get(key),
                         MethodName(c.train.method), row.attack, row.fpr,
                         row.tpr, row.tpr_std,
                         FormatDouble(Mean(metrics[r].test_acc)),
                         FormatDouble(Mean(metrics[r].rob_acc)),
                         FormatDouble(Mean(metrics[r].final_psi)),
                         runs[r].filename().string());
    }
  }
  return out;
}

}  // namespace

void RunReport(const std::vector<fs::path>& runs, const fs::path& out,
               const std::optional<fs::path>& mem_dump) {
  if (runs.empty()) throw UsageError("report needs at least one run");
  std::vector<ExperimentConfig> configs;
  std::vector<ModelMetrics> metrics;
  std::vector<std::vector<AttackRow>> attacks;
  std::string dataset_digest;
  for (const auto& run : runs) {
    configs.push_back(LoadRunConfig(run));
    VerifyManifest(configs.back(), run);
    const std::string digest = Sha256File(run / kDatasetFile);
    if (!dataset_digest.empty() && digest != dataset_digest) {
      throw ConflictError(fmt::format(
          "{} was run on a different dataset than {}", run.string(),
          runs.front().string()));
    }
    dataset_digest = digest;
    metrics.push_back(ReadMetrics(run));
    attacks.push_back(ReadAttackReport(run));
  }
  EnsureDir(out);
  const std::string header = HeaderComment(runs, configs);

  std::string methods =
      header +
      "run,train_method,demem_lambda,epsilon,dp,nat_acc,nat_acc_std,rob_acc,"
      "rob_acc_std,attack_name,fpr_target,tpr,tpr_std,n_targets,flag\n";
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto& c = configs[r];
    for (const auto& row : attacks[r]) {
      methods += fmt::format(
          "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
          runs[r].filename().string(), MethodName(c.train.method),
          c.Get("train.demem_lambda"), c.Get("attack.epsilon"),
          c.Get("dp.enabled"), FormatDouble(Mean(metrics[r].test_acc)),
          StdField(metrics[r].test_acc), FormatDouble(Mean(metrics[r].rob_acc)),
          StdField(metrics[r].rob_acc), row.attack, row.fpr, row.tpr,
          row.tpr_std, row.n_targets, row.flag);
    }
  }
  WriteFileAtomic(out / "methods.csv", methods);

  std::string bins;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    fs::path path = mem_dump ? *mem_dump : runs[r] / kMemorizationFile;
    if (!fs::exists(path)) {
      if (mem_dump) throw FileError("cannot open " + path.string());
      continue;
    }
    bins += BinTable(runs[r], configs[r], ReadMemorizationCsv(path));
  }
  if (!bins.empty()) {
    WriteFileAtomic(out / "bins.csv",
                    header + "run,bin,n_samples,attack_name,tpr,fpr_target,"
                             "test_acc\n" +
                        bins);
  }

  for (const std::string key : {"train.demem_lambda", "attack.epsilon"}) {
    std::set<std::string> values;
    for (const auto& c : configs) values.insert(c.Get(key));
    if (values.size() < 2) continue;
    const std::string name =
        key == "train.demem_lambda" ? "lambda_sweep.csv" : "epsilon_sweep.csv";
    WriteFileAtomic(out / name,
                    header + SweepTable(key, runs, configs, metrics, attacks));
  }
}

void RunSweep(const ExperimentConfig& config, const std::string& param,
              const std::vector<std::string>& values, const fs::path& out,
              int workers) {
  if (values.empty()) throw UsageError("sweep needs at least one value");
  std::vector<fs::path> runs;
  for (const auto& value : values) {
    ExperimentConfig c = config;
    c.Set(param, value);
    const fs::path dir = out / fmt::format("{}={}", param, value);
    spdlog::info("sweep: {}={}", param, value);
    RunShadow(c, dir, workers);
    RunAttack(dir, workers);
    RunMemorize(dir);
    runs.push_back(dir);
  }
  RunReport(runs, out / "report");
}

int ExitCodeFor(const std::exception& error) {
  const auto* e = dynamic_cast<const Error*>(&error);
  if (e == nullptr) return 4;
  switch (e->kind()) {
    case ErrorKind::kConfig:
    case ErrorKind::kUsage:
    case ErrorKind::kConflict:
      return 2;
    case ErrorKind::kFormat:
    case ErrorKind::kFile:
    case ErrorKind::kInput:
    case ErrorKind::kCoverage:
      return 3;
    case ErrorKind::kNumeric:
    case ErrorKind::kTraining:
      return 4;
  }
  return 4;
}

}  // namespace memlab::lab
