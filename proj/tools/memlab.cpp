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

#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "memlab/errors.hpp"
#include "memlab/lab/config.hpp"
#include "memlab/lab/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using memlab::lab::ExperimentConfig;

struct CommonOptions {
  std::string config_path;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  int workers = 1;
  std::vector<std::string> overrides;
};

void AddConfigOptions(CLI::App* app, CommonOptions& opts) {
  app->add_option("--config", opts.config_path, "key=value config file");
  app->add_option("--seed", opts.seed, "overrides the config seed");
  app->add_option("--set", opts.overrides,
                  "extra key=value setting, applied after the file")
      ->take_all();
}

ExperimentConfig ResolveConfig(const CommonOptions& opts) {
  ExperimentConfig config = opts.config_path.empty()
                                ? ExperimentConfig()
                                : memlab::lab::LoadConfig(opts.config_path);
  for (const auto& kv : opts.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw memlab::ConfigError("--set expects key=value, got '" + kv + "'");
    }
    config.Set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (opts.seed) config.seed = *opts.seed;
  config.Validate();
  return config;
}

std::vector<std::string> SplitValues(const std::string& values) {
  std::vector<std::string> out;
  std::string item;
  for (char c : values) {
    if (c == ',') {
      out.push_back(item);
      item.clear();
    } else {
      item += c;
    }
  }
  out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_pattern("[%l] %v");
  CLI::App app{"memlab: adversarial training, memorization and membership "
               "inference experiments"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");

  CommonOptions opts;
  std::string param, values, mem_dump;
  std::vector<std::string> runs;

  auto* gen = app.add_subcommand("gen-data", "write the configured dataset");
  AddConfigOptions(gen, opts);
  gen->add_option("--out", opts.out, "output directory");

  auto* train = app.add_subcommand("train", "train one model on the dataset");
  AddConfigOptions(train, opts);
  train->add_option("--out", opts.out, "output directory");

  auto* shadow = app.add_subcommand("shadow", "train the shadow ensemble");
  AddConfigOptions(shadow, opts);
  shadow->add_option("--out", opts.out, "run directory")->required();
  shadow->add_option("--workers", opts.workers, "models trained concurrently")
      ->check(CLI::PositiveNumber);

  auto* attack = app.add_subcommand("attack", "membership inference on a run");
  attack->add_option("--out", opts.out, "run directory")->required();
  attack->add_option("--workers", opts.workers, "targets scored concurrently")
      ->check(CLI::PositiveNumber);

  auto* memorize =
      app.add_subcommand("memorize", "memorization scores of a run");
  memorize->add_option("--out", opts.out, "run directory")->required();

  auto* report = app.add_subcommand("report", "tables over attacked runs");
  report->add_option("runs", runs, "run directories")->required();
  report->add_option("--out", opts.out, "output directory")->required();
  report->add_option("--mem", mem_dump, "memorization dump for bin tables");

  auto* sweep = app.add_subcommand("sweep", "shadow+attack+memorize per value");
  AddConfigOptions(sweep, opts);
  sweep->add_option("--out", opts.out, "output directory")->required();
  sweep->add_option("--workers", opts.workers, "models trained concurrently")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--param", param, "config key to vary")->required();
  sweep->add_option("--values", values, "comma-separated values")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (verbose) spdlog::set_level(spdlog::level::debug);

  try {
    const fs::path out = opts.out;
    if (gen->parsed()) {
      memlab::lab::RunGenData(ResolveConfig(opts), out);
    } else if (train->parsed()) {
      memlab::lab::RunTrain(ResolveConfig(opts), out);
    } else if (shadow->parsed()) {
      const auto summary =
          memlab::lab::RunShadow(ResolveConfig(opts), out, opts.workers);
      spdlog::info("shadow: trained {}, reused {}", summary.trained,
                   summary.skipped);
    } else if (attack->parsed()) {
      memlab::lab::RunAttack(out, opts.workers);
    } else if (memorize->parsed()) {
      memlab::lab::RunMemorize(out);
    } else if (report->parsed()) {
      std::vector<fs::path> dirs(runs.begin(), runs.end());
      memlab::lab::RunReport(
          dirs, out,
          mem_dump.empty() ? std::nullopt : std::optional<fs::path>(mem_dump));
    } else if (sweep->parsed()) {
      memlab::lab::RunSweep(ResolveConfig(opts), param, SplitValues(values),
                            out, opts.workers);
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return memlab::lab::ExitCodeFor(e);
  }
  return 0;
}
