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

#include "memlab/lab/artifacts.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "memlab/errors.hpp"

namespace memlab::lab {

std::string Sha256Hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(),
                 nullptr) != 1) {
    throw NumericError("sha256 digest failed");
  }
  std::string hex;
  for (unsigned int i = 0; i < length; ++i) {
    hex += fmt::format("{:02x}", digest[i]);
  }
  return hex;
}

std::string Sha256File(const std::filesystem::path& path) {
  return Sha256Hex(ReadFile(path));
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void WriteFileAtomic(const std::filesystem::path& path,
                     std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FileError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw FileError("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw FileError(fmt::format("cannot rename {} to {}: {}", tmp.string(),
                                path.string(), ec.message()));
  }
}

std::string FormatDouble(double value) { return fmt::format("{}", value); }

double ParseDouble(std::string_view text, std::string_view where) {
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw FormatError(fmt::format("{}: cannot parse number '{}'", where, text));
  }
  return v;
}

std::uint64_t ParseUnsigned(std::string_view text, std::string_view where) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw FormatError(
        fmt::format("{}: cannot parse integer '{}'", where, text));
  }
  return v;
}

std::vector<std::vector<std::string>> ReadCsv(const std::filesystem::path& path,
                                              std::string_view header) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool seen_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!seen_header) {
      if (line != header) {
        throw FormatError(fmt::format("{}: expected header '{}', got '{}'",
                                      path.string(), header, line));
      }
      seen_header = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream stream(line);
    std::string cell;
    while (std::getline(stream, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  if (!seen_header) throw FormatError(path.string() + ": missing header");
  return rows;
}

std::string ConfidenceCsvRows(const std::vector<ConfidenceRow>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{}\n", r.model_id, r.sample_id,
                       r.is_member ? 1 : 0, r.true_label,
                       FormatDouble(r.confidence));
  }
  return out;
}

namespace {

void ExpectColumns(const std::vector<std::string>& row, std::size_t n,
                   const std::filesystem::path& path, std::size_t index) {
  if (row.size() != n) {
    throw FormatError(fmt::format("{}: row {} has {} columns, expected {}",
                                  path.string(), index + 1, row.size(), n));
  }
}

}  // namespace

EnsembleDump ReadEnsembleDump(const std::filesystem::path& confidences,
                              const std::filesystem::path& predictions) {
  const auto conf_rows = ReadCsv(confidences, kConfidenceHeader);
  const auto pred_rows = ReadCsv(predictions, kPredictionHeader);
  if (conf_rows.empty()) throw FormatError(confidences.string() + ": no rows");
  std::size_t n_models = 0, n_samples = 0;
  for (std::size_t i = 0; i < conf_rows.size(); ++i) {
    ExpectColumns(conf_rows[i], 5, confidences, i);
    const auto where = fmt::format("{} row {}", confidences.string(), i + 1);
    n_models = std::max<std::size_t>(
        n_models, ParseUnsigned(conf_rows[i][0], where) + 1);
    n_samples = std::max<std::size_t>(
        n_samples, ParseUnsigned(conf_rows[i][1], where) + 1);
  }
  if (conf_rows.size() != n_models * n_samples) {
    throw FormatError(fmt::format("{}: {} rows do not form a {}x{} grid",
                                  confidences.string(), conf_rows.size(),
                                  n_models, n_samples));
  }
  if (pred_rows.size() != conf_rows.size()) {
    throw FormatError(fmt::format("{}: {} rows, expected {}",
                                  predictions.string(), pred_rows.size(),
                                  conf_rows.size()));
  }
  EnsembleDump dump;
  dump.ensemble.n_models = n_models;
  dump.ensemble.n_samples = n_samples;
  dump.ensemble.membership.resize(conf_rows.size());
  dump.ensemble.confidences.resize(conf_rows.size());
  dump.labels.assign(n_samples, -1);
  dump.correct.resize(conf_rows.size());
  for (std::size_t i = 0; i < conf_rows.size(); ++i) {
    const auto& row = conf_rows[i];
    const auto where = fmt::format("{} row {}", confidences.string(), i + 1);
    const std::size_t m = ParseUnsigned(row[0], where);
    const std::size_t s = ParseUnsigned(row[1], where);
    if (m * n_samples + s != i) {
      throw FormatError(where + ": rows are not in model-major order");
    }
    const std::uint64_t member = ParseUnsigned(row[2], where);
    if (member > 1) throw FormatError(where + ": is_member must be 0 or 1");
    const int label = static_cast<int>(ParseUnsigned(row[3], where));
    if (dump.labels[s] != -1 && dump.labels[s] != label) {
      throw FormatError(where + ": true_label differs between models");
    }
    dump.labels[s] = label;
    dump.ensemble.membership[i] = static_cast<std::uint8_t>(member);
    dump.ensemble.confidences[i] = ParseDouble(row[4], where);

    const auto& pred = pred_rows[i];
    const auto pwhere = fmt::format("{} row {}", predictions.string(), i + 1);
    ExpectColumns(pred, 3, predictions, i);
    if (ParseUnsigned(pred[0], pwhere) != m ||
        ParseUnsigned(pred[1], pwhere) != s) {
      throw FormatError(pwhere + ": does not match the confidence dump order");
    }
    dump.correct[i] =
        static_cast<int>(ParseUnsigned(pred[2], pwhere)) == label ? 1 : 0;
  }
  try {
    dump.ensemble.Validate();
  } catch (const InputError& e) {
    throw FormatError(confidences.string() + ": " + e.what());
  }
  return dump;
}

std::string MemorizationCsv(const MemorizationEstimate& estimate) {
  const BinnedScores binned = BinScores(estimate);
  std::string out = std::string(kMemorizationHeader) + "\n";
  for (std::size_t s = 0; s < estimate.size(); ++s) {
    const auto& mem = estimate.per_sample[s];
    out += fmt::format("{},{},{},{},{}\n", s, mem ? FormatDouble(*mem) : "",
                       estimate.in_counts[s], estimate.out_counts[s],
                       binned.bins[s] ? fmt::format("{}", *binned.bins[s]) : "");
  }
  return out;
}

MemorizationDump ReadMemorizationCsv(const std::filesystem::path& path) {
  const auto rows = ReadCsv(path, kMemorizationHeader);
  MemorizationDump dump;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ExpectColumns(rows[i], 5, path, i);
    const auto where = fmt::format("{} row {}", path.string(), i + 1);
    if (ParseUnsigned(rows[i][0], where) != i) {
      throw FormatError(where + ": sample ids must be 0, 1, 2, ...");
    }
    dump.mem.push_back(rows[i][1].empty()
                           ? std::nullopt
                           : std::optional(ParseDouble(rows[i][1], where)));
    dump.bins.push_back(
        rows[i][4].empty()
            ? std::nullopt
            : std::optional<std::size_t>(ParseUnsigned(rows[i][4], where)));
    if (dump.bins.back() && *dump.bins.back() > kMemBins) {
      throw FormatError(where + ": bin outside [0, 21]");
    }
  }
  return dump;
}

}  // namespace memlab::lab
