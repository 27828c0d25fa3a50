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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "memlab/errors.hpp"
#include "memlab/lab/artifacts.hpp"
#include "memlab/lab/config.hpp"
#include "memlab/lab/pipeline.hpp"
#include "memlab/memorization.hpp"

namespace memlab::lab {
namespace {

using ::testing::HasSubstr;

std::size_t CountLines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

// Data rows of a CSV file: lines that are neither comments nor the header.
std::vector<std::string> DataRows(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::string> rows;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    rows.push_back(line);
  }
  return rows;
}

ExperimentConfig TinyConfig() {
  return ParseConfig(
      "seed = 5\n"
      "dataset.n = 40\n"
      "dataset.noise = 0.3\n"
      "model.layer_widths = 2,8,2\n"
      "train.method = standard\n"
      "train.epochs = 2\n"
      "train.batch_size = 8\n"
      "ensemble.n_models = 4\n");
}

class LabTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            (std::string("memlab_lab_") +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  fs::path root_;
};

TEST(Config, DefaultsMatchDeskRegime) {
  const ExperimentConfig c;
  EXPECT_EQ(c.Get("model.layer_widths"), "2,32,32,2");
  EXPECT_EQ(c.Get("train.method"), "pgd_at");
  EXPECT_EQ(c.Get("attack.epsilon"), "0.05");
  EXPECT_EQ(c.Get("ensemble.n_models"), "32");
  EXPECT_EQ(c.Get("mia.fpr_targets"), "0.01,0.001");
  EXPECT_EQ(c.train.attack.steps, 10);
  EXPECT_EQ(c.train.eval_attack.steps, 20);
  EXPECT_NO_THROW(c.Validate());
}

TEST(Config, ParseSetAndCanonical) {
  const ExperimentConfig c = ParseConfig(
      "# comment\n"
      "train.demem_lambda = 0.2   # trailing\n"
      "\n"
      "attack.epsilon=0.08\n"
      "mia.methods = loss,lira_offline\n");
  EXPECT_EQ(c.train.demem_lambda, 0.2);
  EXPECT_EQ(c.train.attack.epsilon, 0.08);
  EXPECT_DOUBLE_EQ(c.train.attack.step_size, 0.02);
  EXPECT_EQ(c.Get("mia.methods"), "loss,lira_offline");
  const std::string canonical = c.Canonical();
  EXPECT_THAT(canonical, HasSubstr("train.demem_lambda=0.2\n"));
  EXPECT_EQ(CountLines(canonical), ConfigKeys().size());
  EXPECT_TRUE(std::is_sorted(ConfigKeys().begin(), ConfigKeys().end()));
  EXPECT_EQ(c.Hash(), Sha256Hex(canonical));
  EXPECT_NE(c.Hash(), ExperimentConfig().Hash());
  EXPECT_EQ(ParseConfig(canonical).Canonical(), canonical);
}

TEST(Config, StepSizeOverridesSurviveEpsilon) {
  const ExperimentConfig c =
      ParseConfig("attack.step_size = 0.005\nattack.epsilon = 0.1\n");
  EXPECT_EQ(c.train.attack.step_size, 0.005);
  EXPECT_EQ(c.train.attack.epsilon, 0.1);
}

TEST(Config, Errors) {
  try {
    ParseConfig("seed = 1\nbogus.key = 3\n", "x.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_THAT(e.what(), HasSubstr("x.cfg:2"));
  }
  try {
    ParseConfig("seed = 1\nseed = 2\n", "y.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_THAT(e.what(), HasSubstr("y.cfg:2"));
  }
  EXPECT_THROW(ParseConfig("seed\n"), ConfigError);
  EXPECT_THROW(ParseConfig("dataset.n = many\n"), ConfigError);
  ExperimentConfig c;
  c.Set("ensemble.inclusion_prob", "1.5");
  EXPECT_THROW(c.Validate(), ConfigError);
}

TEST(Artifacts, NumberFormatting) {
  EXPECT_EQ(FormatDouble(0.1), "0.1");
  EXPECT_EQ(FormatDouble(2.0), "2");
  EXPECT_EQ(FormatDouble(1.0 / 3.0), "0.3333333333333333");
  EXPECT_EQ(FormatDouble(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(ParseDouble(FormatDouble(1.0 / 3.0), "t"), 1.0 / 3.0);
  EXPECT_TRUE(std::isinf(ParseDouble("inf", "t")));
  EXPECT_THROW(ParseDouble("1.5x", "t"), FormatError);
  EXPECT_THROW(ParseUnsigned("-1", "t"), FormatError);
  EXPECT_EQ(Sha256Hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Artifacts, MemorizationCsvRoundTrip) {
  MemorizationEstimate e;
  e.per_sample = {0.0, 1.0, std::nullopt, 0.5};
  e.in_counts = {3, 2, 0, 1};
  e.out_counts = {1, 2, 4, 3};
  const fs::path path = fs::temp_directory_path() / "memlab_mem_roundtrip.csv";
  WriteFileAtomic(path, MemorizationCsv(e));
  const MemorizationDump dump = ReadMemorizationCsv(path);
  fs::remove(path);
  EXPECT_EQ(dump.mem, e.per_sample);
  ASSERT_EQ(dump.bins.size(), 4u);
  EXPECT_EQ(dump.bins[0], std::optional<std::size_t>(0));
  EXPECT_EQ(dump.bins[1], std::optional<std::size_t>(21));
  EXPECT_EQ(dump.bins[2], std::nullopt);
  EXPECT_EQ(dump.bins[3], std::optional<std::size_t>(11));
}

TEST(Membership, InCountsStayInBinomialBulk) {
  // 32 masks at p = 0.5: P(count outside [8, 24]) is about 2e-4 per sample.
  const std::size_t n = 2000, models = 32;
  std::vector<std::size_t> in(n, 0);
  for (std::size_t m = 0; m < models; ++m) {
    const auto mask = SampleMembership(n, 0.5, MemberMaskSeed(77, m));
    for (std::size_t s = 0; s < n; ++s) in[s] += mask[s];
  }
  const auto inside = std::count_if(in.begin(), in.end(), [](std::size_t c) {
    return c >= 8 && c <= 24;
  });
  EXPECT_GE(static_cast<double>(inside), 0.99 * n);
}

TEST_F(LabTest, ShadowDumpHasOneRowPerModelAndSample) {
  const fs::path run = root_ / "run";
  const auto summary = RunShadow(TinyConfig(), run, 1);
  EXPECT_EQ(summary.trained, 4u);
  EXPECT_EQ(DataRows(run / "confidences.csv").size(), 160u);
  EXPECT_EQ(DataRows(run / "predictions.csv").size(), 160u);
  EXPECT_EQ(DataRows(run / "membership.csv").size(), 4u);
  const EnsembleDump dump =
      ReadEnsembleDump(run / "confidences.csv", run / "predictions.csv");
  EXPECT_EQ(dump.ensemble.n_models, 4u);
  EXPECT_EQ(dump.ensemble.n_samples, 40u);
  EXPECT_TRUE(fs::exists(run / "manifest.json"));
  EXPECT_TRUE(fs::exists(run / "models" / "model_003.ckpt"));
}

TEST_F(LabTest, ShadowIsDeterministicAcrossWorkersAndReruns) {
  const ExperimentConfig config = TinyConfig();
  RunShadow(config, root_ / "a", 1);
  RunShadow(config, root_ / "b", 3);
  for (const char* file : {"confidences.csv", "predictions.csv",
                           "membership.csv", "metrics.csv", "manifest.json"}) {
    EXPECT_EQ(ReadFile(root_ / "a" / file), ReadFile(root_ / "b" / file))
        << file;
  }
  const std::string before = ReadFile(root_ / "a" / "confidences.csv");
  const auto again = RunShadow(config, root_ / "a", 2);
  EXPECT_EQ(again.trained, 0u);
  EXPECT_EQ(again.skipped, 4u);
  EXPECT_EQ(ReadFile(root_ / "a" / "confidences.csv"), before);
}

TEST_F(LabTest, ShadowRefusesDifferentConfig) {
  ExperimentConfig config = TinyConfig();
  RunShadow(config, root_ / "run", 1);
  config.Set("train.demem_lambda", "0.2");
  EXPECT_THROW(RunShadow(config, root_ / "run", 1), ConflictError);
}

TEST_F(LabTest, AttackReportFlagsUnresolvableTargets) {
  ExperimentConfig config = TinyConfig();
  config.Set("mia.methods", "loss,lira_offline,lira_online");
  config.Set("mia.fpr_targets", "0.001,0.1");
  const fs::path run = root_ / "run";
  RunShadow(config, run, 1);
  RunAttack(run, 1);
  const auto rows = DataRows(run / "attack_report.csv");
  ASSERT_EQ(rows.size(), 6u);
  int coverage = 0;
  for (const auto& row : rows) {
    if (row.find("lira_online") == 0) {
      // Three shadows never hold two IN and two OUT fits at once.
      EXPECT_THAT(row, HasSubstr("insufficient_coverage"));
      ++coverage;
    } else if (row.find("loss,0.001,") == 0) {
      // About 20 non-members per target: 1/1000 is below resolution.
      EXPECT_THAT(row, HasSubstr("unresolvable"));
    } else if (row.find("loss,0.1,") == 0) {
      EXPECT_THAT(row, ::testing::EndsWith(","));
    }
  }
  EXPECT_EQ(coverage, 2);
  EXPECT_EQ(DataRows(run / "attack_targets.csv").size(), 3u * 2u * 4u);
  EXPECT_THROW(RunAttack(root_ / "missing", 1), FileError);
}

TEST_F(LabTest, ReportWithoutMemDumpHasOnlyMethodsTable) {
  ExperimentConfig config = TinyConfig();
  config.Set("mia.methods", "loss");
  const fs::path run = root_ / "run";
  RunShadow(config, run, 1);
  RunAttack(run, 1);
  RunReport({run}, root_ / "report");
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(root_ / "report")) {
    files.push_back(entry.path().filename().string());
  }
  EXPECT_EQ(files, std::vector<std::string>{"methods.csv"});
  EXPECT_EQ(DataRows(root_ / "report" / "methods.csv").size(), 2u);
  EXPECT_THAT(ReadFile(root_ / "report" / "methods.csv"),
              HasSubstr("# run=run config_hash=" + config.Hash()));
}

TEST_F(LabTest, AllZeroMemDumpGivesSingleBinZeroRow) {
  ExperimentConfig config = TinyConfig();
  config.Set("mia.methods", "loss");
  config.Set("mia.report_attack", "loss");
  config.Set("mia.fpr_targets", "0.1");
  config.Set("mia.report_fpr", "0.1");
  const fs::path run = root_ / "run";
  RunShadow(config, run, 1);
  RunAttack(run, 1);
  MemorizationEstimate zero;
  zero.per_sample.assign(40, 0.0);
  zero.in_counts.assign(40, 2);
  zero.out_counts.assign(40, 2);
  const fs::path mem = root_ / "mem.csv";
  WriteFileAtomic(mem, MemorizationCsv(zero));
  RunReport({run}, root_ / "report", mem);
  const auto rows = DataRows(root_ / "report" / "bins.csv");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_THAT(rows[0], ::testing::StartsWith("run,0,40,loss,"));
}

TEST_F(LabTest, LambdaSweepEchoesValues) {
  ExperimentConfig config = TinyConfig();
  config.Set("mia.methods", "loss");
  config.Set("mia.report_attack", "loss");
  RunSweep(config, "train.demem_lambda", {"0", "0.2", "1.0"}, root_, 1);
  const fs::path report = root_ / "report";
  const auto rows = DataRows(report / "lambda_sweep.csv");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_THAT(rows[0], ::testing::StartsWith("0,standard,loss,"));
  EXPECT_THAT(rows[1], ::testing::StartsWith("0.2,standard,loss,"));
  EXPECT_THAT(rows[2], ::testing::StartsWith("1,standard,loss,"));
  EXPECT_EQ(DataRows(report / "methods.csv").size(), 3u * 2u);
  EXPECT_FALSE(fs::exists(report / "epsilon_sweep.csv"));
  EXPECT_TRUE(fs::exists(report / "bins.csv"));
}

TEST_F(LabTest, ReportRejectsMixedDatasets) {
  ExperimentConfig a = TinyConfig();
  a.Set("mia.methods", "loss");
  ExperimentConfig b = a;
  b.Set("dataset.seed", "999");
  RunShadow(a, root_ / "a", 1);
  RunAttack(root_ / "a", 1);
  RunShadow(b, root_ / "b", 1);
  RunAttack(root_ / "b", 1);
  EXPECT_THROW(RunReport({root_ / "a", root_ / "b"}, root_ / "report"),
               ConflictError);
}

TEST_F(LabTest, ManifestDetectsTampering) {
  ExperimentConfig config = TinyConfig();
  config.Set("mia.methods", "loss");
  const fs::path run = root_ / "run";
  RunShadow(config, run, 1);
  std::ofstream(run / "confidences.csv", std::ios::app) << "# edited\n";
  EXPECT_THROW(RunAttack(run, 1), FormatError);
}

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(ExitCodeFor(ConfigError("x")), 2);
  EXPECT_EQ(ExitCodeFor(UsageError("x")), 2);
  EXPECT_EQ(ExitCodeFor(ConflictError("x")), 2);
  EXPECT_EQ(ExitCodeFor(FormatError("x")), 3);
  EXPECT_EQ(ExitCodeFor(FileError("x")), 3);
  EXPECT_EQ(ExitCodeFor(InputError("x")), 3);
  EXPECT_EQ(ExitCodeFor(CoverageError("x")), 3);
  EXPECT_EQ(ExitCodeFor(NumericError("x")), 4);
  EXPECT_EQ(ExitCodeFor(TrainingError("x")), 4);
  EXPECT_EQ(ExitCodeFor(std::runtime_error("x")), 4);
}

}  // namespace
}  // namespace memlab::lab
