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

#include "memlab/dataset.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "memlab/errors.hpp"

namespace memlab {

Dataset Dataset::Subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.num_classes = num_classes;
  if (indices.empty()) return out;
  const std::size_t d = dim();
  std::vector<double> values;
  values.reserve(indices.size() * d);
  out.labels.reserve(indices.size());
  for (std::size_t idx : indices) {
    if (idx >= size()) {
      throw InputError(fmt::format("subset index {} out of range {}", idx,
                                   size()));
    }
    auto r = features.row(idx);
    values.insert(values.end(), r.begin(), r.end());
    out.labels.push_back(labels[idx]);
  }
  out.features = Tensor::Matrix(indices.size(), d, std::move(values));
  return out;
}

void Dataset::Validate() const {
  if (empty()) throw InputError("dataset is empty");
  if (features.rank() != 2 || features.rows() != labels.size()) {
    throw InputError(fmt::format("dataset has {} labels but features {}",
                                 labels.size(), features.ShapeString()));
  }
  if (num_classes < 2) throw InputError("dataset needs at least 2 classes");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw InputError(fmt::format("label {} outside [0, {})", y,
                                   num_classes));
    }
  }
  if (!features.AllFinite()) throw NumericError("non-finite feature value");
}

}  // namespace memlab
