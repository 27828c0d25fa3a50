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

#include "memlab/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "memlab/errors.hpp"
#include "memlab/rng.hpp"

namespace memlab {

std::string DatasetKindName(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::kTwoGaussians:
      return "two_gaussians";
    case DatasetKind::kRings:
      return "rings";
    case DatasetKind::kXorGrid:
      return "xor_grid";
  }
  return "unknown";
}

DatasetKind ParseDatasetKind(const std::string& name) {
  if (name == "two_gaussians") return DatasetKind::kTwoGaussians;
  if (name == "rings") return DatasetKind::kRings;
  if (name == "xor_grid") return DatasetKind::kXorGrid;
  throw InputError("unknown dataset kind '" + name + "'");
}

void MinMaxNormalize(Tensor& features) {
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  for (std::size_t c = 0; c < d; ++c) {
    double lo = features.at(0, c), hi = lo;
    for (std::size_t r = 1; r < n; ++r) {
      lo = std::min(lo, features.at(r, c));
      hi = std::max(hi, features.at(r, c));
    }
    const double span = hi - lo;
    for (std::size_t r = 0; r < n; ++r) {
      double& v = features.at(r, c);
      v = span > 0.0 ? std::clamp((v - lo) / span, 0.0, 1.0) : 0.0;
    }
  }
}

Dataset GenerateDataset(DatasetKind kind, std::size_t n, double noise,
                        std::uint64_t seed) {
  if (n < 4) throw InputError("dataset needs at least 4 samples");
  if (!(noise >= 0.0)) throw InputError("noise must be >= 0");
  Rng rng(seed);
  std::vector<double> values(n * 2);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    double x = 0.0, y = 0.0;
    int label = static_cast<int>(i % 2);
    switch (kind) {
      case DatasetKind::kTwoGaussians: {
        const double centre = label == 0 ? -0.5 : 0.5;
        x = centre + noise * rng.Normal();
        y = centre + noise * rng.Normal();
        break;
      }
      case DatasetKind::kRings: {
        const double radius = (label == 0 ? 0.5 : 1.0) + noise * rng.Normal();
        const double angle = 2.0 * std::numbers::pi * rng.Uniform();
        x = radius * std::cos(angle);
        y = radius * std::sin(angle);
        break;
      }
      case DatasetKind::kXorGrid: {
        // Quadrants 0 and 3 are class 0, 1 and 2 class 1.
        const std::size_t quadrant = i % 4;
        const double cx = quadrant & 1 ? 0.5 : -0.5;
        const double cy = quadrant & 2 ? 0.5 : -0.5;
        label = (quadrant == 1 || quadrant == 2) ? 1 : 0;
        x = cx + noise * rng.Normal();
        y = cy + noise * rng.Normal();
        break;
      }
    }
    values[2 * i] = x;
    values[2 * i + 1] = y;
    labels[i] = label;
  }
  Dataset data;
  data.features = Tensor::Matrix(n, 2, std::move(values));
  MinMaxNormalize(data.features);
  data.labels = std::move(labels);
  data.num_classes = 2;
  return data;
}

namespace {

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream stream(line);
  while (std::getline(stream, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string Trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

Dataset LoadCsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || Trim(line).empty()) {
    throw FormatError(path.string() + ": empty file");
  }
  const std::size_t columns = SplitCsvLine(Trim(line)).size();
  if (columns < 2) {
    throw FormatError(path.string() +
                      ": need at least one feature and a label column");
  }
  std::vector<double> values;
  std::vector<int> labels;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    line = Trim(line);
    if (line.empty()) continue;
    ++row;
    const auto cells = SplitCsvLine(line);
    if (cells.size() != columns) {
      throw FormatError(fmt::format("{}: row {} has {} columns, expected {}",
                                    path.string(), row, cells.size(), columns));
    }
    for (std::size_t c = 0; c < columns; ++c) {
      const std::string cell = Trim(cells[c]);
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      if (c + 1 < columns) {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr != last || cell.empty()) {
          throw FormatError(fmt::format(
              "{}: non-numeric value '{}' at row {}, column {}", path.string(),
              cell, row, c + 1));
        }
        if (!std::isfinite(v)) {
          throw FormatError(fmt::format("{}: non-finite value at row {}, "
                                        "column {}",
                                        path.string(), row, c + 1));
        }
        values.push_back(v);
      } else {
        int label = 0;
        auto [ptr, ec] = std::from_chars(first, last, label);
        if (ec != std::errc() || ptr != last || cell.empty() || label < 0) {
          throw FormatError(fmt::format(
              "{}: invalid label '{}' at row {}, column {}", path.string(),
              cell, row, c + 1));
        }
        labels.push_back(label);
      }
    }
  }
  if (labels.empty()) throw FormatError(path.string() + ": no data rows");
  const int max_label = *std::max_element(labels.begin(), labels.end());
  const int min_label = *std::min_element(labels.begin(), labels.end());
  if (max_label == min_label) {
    throw FormatError(path.string() + ": single class");
  }
  Dataset data;
  data.features = Tensor::Matrix(labels.size(), columns - 1, std::move(values));
  MinMaxNormalize(data.features);
  data.labels = std::move(labels);
  data.num_classes = static_cast<std::size_t>(max_label) + 1;
  return data;
}

void WriteDatasetCsv(const Dataset& data, std::ostream& out) {
  for (std::size_t c = 0; c < data.dim(); ++c) out << 'f' << c << ',';
  out << "label\n";
  for (std::size_t r = 0; r < data.size(); ++r) {
    for (double v : data.features.row(r)) out << fmt::format("{},", v);
    out << data.labels[r] << '\n';
  }
}

}  // namespace memlab
