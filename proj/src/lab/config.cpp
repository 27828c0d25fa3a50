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

#include "memlab/lab/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "memlab/errors.hpp"
#include "memlab/lab/artifacts.hpp"
#include "memlab/rng.hpp"

namespace memlab::lab {
namespace {

std::string Trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> SplitList(const std::string& value) {
  std::vector<std::string> items;
  std::stringstream stream(value);
  std::string item;
  while (std::getline(stream, item, ',')) items.push_back(Trim(item));
  return items;
}

template <typename T>
T ParseNumber(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (value.empty() || ec != std::errc() || ptr != last) {
    throw ConfigError(fmt::format("{}: cannot parse '{}'", key, value));
  }
  return out;
}

bool ParseBool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError(fmt::format("{}: expected true or false, got '{}'", key,
                                value));
}

std::string Bool(bool b) { return b ? "true" : "false"; }

template <typename T>
std::string Join(const std::vector<T>& items) {
  return fmt::format("{}", fmt::join(items, ","));
}

std::string QueryName(QueryMode mode) {
  return mode == QueryMode::kNatural ? "natural" : "adversarial";
}

std::string VarianceName(VarianceMode mode) {
  switch (mode) {
    case VarianceMode::kAuto:
      return "auto";
    case VarianceMode::kPerExample:
      return "per_example";
    case VarianceMode::kGlobal:
      return "global";
  }
  return "auto";
}

// Re-throws library parse errors as configuration errors naming the key.
template <typename F>
auto AsConfig(const std::string& key, F parse) {
  try {
    return parse();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(fmt::format("{}: {}", key, e.what()));
  }
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define NUMBER_FIELD(key, member, type)                                   \
  {                                                                       \
    key, Field {                                                          \
      [](ExperimentConfig& c, const std::string& v) {                     \
        c.member = ParseNumber<type>(key, v);                             \
      },                                                                  \
          [](const ExperimentConfig& c) { return fmt::format("{}", c.member); } \
    }                                                                     \
  }

const std::map<std::string, Field>& Fields() {
  static const std::map<std::string, Field> fields = {
      NUMBER_FIELD("seed", seed, std::uint64_t),
      {"dataset.kind",
       {[](ExperimentConfig& c, const std::string& v) {
          c.dataset.kind =
              AsConfig("dataset.kind", [&] { return ParseDatasetKind(v); });
        },
        [](const ExperimentConfig& c) {
          return DatasetKindName(c.dataset.kind);
        }}},
      NUMBER_FIELD("dataset.n", dataset.n, std::size_t),
      NUMBER_FIELD("dataset.noise", dataset.noise, double),
      {"dataset.seed",
       {[](ExperimentConfig& c, const std::string& v) {
          c.dataset.seed = ParseNumber<std::uint64_t>("dataset.seed", v);
        },
        [](const ExperimentConfig& c) {
          return fmt::format("{}", c.DatasetSeed());
        }}},
      {"dataset.csv",
       {[](ExperimentConfig& c, const std::string& v) { c.dataset.csv = v; },
        [](const ExperimentConfig& c) { return c.dataset.csv; }}},
      {"model.layer_widths",
       {[](ExperimentConfig& c, const std::string& v) {
          std::vector<std::size_t> widths;
          for (const auto& item : SplitList(v)) {
            widths.push_back(
                ParseNumber<std::size_t>("model.layer_widths", item));
          }
          c.train.model.layer_widths = widths;
        },
        [](const ExperimentConfig& c) {
          return Join(c.train.model.layer_widths);
        }}},
      {"train.method",
       {[](ExperimentConfig& c, const std::string& v) {
          c.train.method =
              AsConfig("train.method", [&] { return ParseMethod(v); });
        },
        [](const ExperimentConfig& c) { return MethodName(c.train.method); }}},
      NUMBER_FIELD("train.epochs", train.epochs, int),
      NUMBER_FIELD("train.batch_size", train.batch_size, std::size_t),
      NUMBER_FIELD("train.learning_rate", train.learning_rate, double),
      NUMBER_FIELD("train.momentum", train.momentum, double),
      NUMBER_FIELD("train.demem_lambda", train.demem_lambda, double),
      NUMBER_FIELD("train.trades_beta", train.trades_beta, double),
      {"train.track_robust_accuracy",
       {[](ExperimentConfig& c, const std::string& v) {
          c.train.track_robust_accuracy =
              ParseBool("train.track_robust_accuracy", v);
        },
        [](const ExperimentConfig& c) {
          return Bool(c.train.track_robust_accuracy);
        }}},
      {"attack.epsilon",
       {[](ExperimentConfig& c, const std::string& v) {
          // Step size follows epsilon unless set explicitly afterwards.
          const double eps = ParseNumber<double>("attack.epsilon", v);
          const AttackParams defaults = TrainingAttack(eps);
          c.train.attack.epsilon = eps;
          c.train.attack.step_size = defaults.step_size;
        },
        [](const ExperimentConfig& c) {
          return fmt::format("{}", c.train.attack.epsilon);
        }}},
      NUMBER_FIELD("attack.step_size", train.attack.step_size, double),
      NUMBER_FIELD("attack.steps", train.attack.steps, int),
      {"attack.random_start",
       {[](ExperimentConfig& c, const std::string& v) {
          c.train.attack.random_start = ParseBool("attack.random_start", v);
        },
        [](const ExperimentConfig& c) {
          return Bool(c.train.attack.random_start);
        }}},
      {"eval.epsilon",
       {[](ExperimentConfig& c, const std::string& v) {
          const double eps = ParseNumber<double>("eval.epsilon", v);
          const AttackParams defaults = EvaluationAttack(eps);
          c.train.eval_attack.epsilon = eps;
          c.train.eval_attack.step_size = defaults.step_size;
        },
        [](const ExperimentConfig& c) {
          return fmt::format("{}", c.train.eval_attack.epsilon);
        }}},
      NUMBER_FIELD("eval.step_size", train.eval_attack.step_size, double),
      NUMBER_FIELD("eval.steps", train.eval_attack.steps, int),
      {"dp.enabled",
       {[](ExperimentConfig& c, const std::string& v) {
          c.train.dp.enabled = ParseBool("dp.enabled", v);
        },
        [](const ExperimentConfig& c) { return Bool(c.train.dp.enabled); }}},
      NUMBER_FIELD("dp.noise_multiplier", train.dp.noise_multiplier, double),
      NUMBER_FIELD("dp.clip_norm", train.dp.clip_norm, double),
      NUMBER_FIELD("ensemble.n_models", ensemble.n_models, std::size_t),
      NUMBER_FIELD("ensemble.inclusion_prob", ensemble.inclusion_prob, double),
      {"mia.methods",
       {[](ExperimentConfig& c, const std::string& v) {
          std::vector<AttackMethod> methods;
          for (const auto& item : SplitList(v)) {
            methods.push_back(
                AsConfig("mia.methods", [&] { return ParseAttackMethod(item); }));
          }
          c.mia.methods = methods;
        },
        [](const ExperimentConfig& c) {
          std::vector<std::string> names;
          for (auto m : c.mia.methods) names.push_back(AttackMethodName(m));
          return Join(names);
        }}},
      {"mia.fpr_targets",
       {[](ExperimentConfig& c, const std::string& v) {
          std::vector<double> targets;
          for (const auto& item : SplitList(v)) {
            targets.push_back(ParseNumber<double>("mia.fpr_targets", item));
          }
          c.mia.fpr_targets = targets;
        },
        [](const ExperimentConfig& c) { return Join(c.mia.fpr_targets); }}},
      {"mia.query",
       {[](ExperimentConfig& c, const std::string& v) {
          if (v == "natural") {
            c.mia.query = QueryMode::kNatural;
          } else if (v == "adversarial") {
            c.mia.query = QueryMode::kAdversarial;
          } else {
            throw ConfigError(fmt::format(
                "mia.query: expected natural or adversarial, got '{}'", v));
          }
        },
        [](const ExperimentConfig& c) { return QueryName(c.mia.query); }}},
      {"mia.variance",
       {[](ExperimentConfig& c, const std::string& v) {
          if (v == "auto") {
            c.mia.variance = VarianceMode::kAuto;
          } else if (v == "per_example") {
            c.mia.variance = VarianceMode::kPerExample;
          } else if (v == "global") {
            c.mia.variance = VarianceMode::kGlobal;
          } else {
            throw ConfigError(fmt::format(
                "mia.variance: expected auto, per_example or global, got '{}'",
                v));
          }
        },
        [](const ExperimentConfig& c) { return VarianceName(c.mia.variance); }}},
      {"mia.report_attack",
       {[](ExperimentConfig& c, const std::string& v) {
          c.mia.report_attack =
              AsConfig("mia.report_attack", [&] { return ParseAttackMethod(v); });
        },
        [](const ExperimentConfig& c) {
          return AttackMethodName(c.mia.report_attack);
        }}},
      NUMBER_FIELD("mia.report_fpr", mia.report_fpr, double),
  };
  return fields;
}

#undef NUMBER_FIELD

}  // namespace

ExperimentConfig::ExperimentConfig() {
  train.method = Method::kPgdAt;
  train.model.layer_widths = {2, 32, 32, 2};
  train.epochs = 100;
  train.batch_size = 4;
  train.learning_rate = 0.02;
}

void ExperimentConfig::Set(const std::string& key, const std::string& value) {
  const auto& fields = Fields();
  const auto it = fields.find(key);
  if (it == fields.end()) {
    throw ConfigError(fmt::format("unknown config key '{}'", key));
  }
  it->second.set(*this, Trim(value));
}

std::string ExperimentConfig::Get(const std::string& key) const {
  const auto& fields = Fields();
  const auto it = fields.find(key);
  if (it == fields.end()) {
    throw ConfigError(fmt::format("unknown config key '{}'", key));
  }
  return it->second.get(*this);
}

std::string ExperimentConfig::Canonical() const {
  std::string out;
  for (const auto& [key, field] : Fields()) {
    out += key + "=" + field.get(*this) + "\n";
  }
  return out;
}

std::string ExperimentConfig::Hash() const { return Sha256Hex(Canonical()); }

std::uint64_t ExperimentConfig::DatasetSeed() const {
  return dataset.seed ? *dataset.seed : MixSeed(seed, 0);
}

void ExperimentConfig::Validate() const {
  try {
    train.Validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (dataset.csv.empty() && dataset.n < 4) {
    throw ConfigError("dataset.n must be at least 4");
  }
  if (!(dataset.noise >= 0.0)) throw ConfigError("dataset.noise must be >= 0");
  if (ensemble.n_models < 2) throw ConfigError("ensemble.n_models must be >= 2");
  if (!(ensemble.inclusion_prob > 0.0 && ensemble.inclusion_prob < 1.0)) {
    throw ConfigError("ensemble.inclusion_prob must be in (0, 1)");
  }
  if (mia.methods.empty()) throw ConfigError("mia.methods is empty");
  if (mia.fpr_targets.empty()) throw ConfigError("mia.fpr_targets is empty");
  for (double t : mia.fpr_targets) {
    if (!(t > 0.0 && t < 1.0)) {
      throw ConfigError(fmt::format("mia.fpr_targets: {} outside (0, 1)", t));
    }
  }
  if (!(mia.report_fpr > 0.0 && mia.report_fpr < 1.0)) {
    throw ConfigError("mia.report_fpr must be in (0, 1)");
  }
}

const std::vector<std::string>& ConfigKeys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [key, field] : Fields()) k.push_back(key);
    return k;
  }();
  return keys;
}

ExperimentConfig ParseConfig(const std::string& text,
                             const std::string& origin) {
  struct Entry {
    std::size_t line;
    std::string key;
    std::string value;
  };
  std::vector<Entry> entries;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(
          fmt::format("{}:{}: expected key=value", origin, line_no));
    }
    std::string key = Trim(line.substr(0, eq));
    if (!seen.insert(key).second) {
      throw ConfigError(
          fmt::format("{}:{}: duplicate key '{}'", origin, line_no, key));
    }
    entries.push_back({line_no, std::move(key), line.substr(eq + 1)});
  }
  // Epsilon keys reset their step size, so they go first.
  std::stable_partition(entries.begin(), entries.end(), [](const Entry& e) {
    return e.key.ends_with(".epsilon");
  });
  ExperimentConfig config;
  for (const auto& e : entries) {
    try {
      config.Set(e.key, e.value);
    } catch (const ConfigError& err) {
      throw ConfigError(fmt::format("{}:{}: {}", origin, e.line, err.what()));
    }
  }
  return config;
}

ExperimentConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseConfig(buffer.str(), path.string());
}

}  // namespace memlab::lab
