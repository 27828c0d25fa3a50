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

#ifndef MEMLAB_DATASET_HPP_
#define MEMLAB_DATASET_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "memlab/tensor.hpp"

namespace memlab {

// Labelled feature matrix. Features are n x dim, labels in [0, num_classes).
struct Dataset {
  Tensor features;
  std::vector<int> labels;
  std::size_t num_classes = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.cols(); }
  bool empty() const { return labels.empty(); }

  // Rows selected by `indices`, in that order.
  Dataset Subset(std::span<const std::size_t> indices) const;
  // Throws InputError on inconsistent shapes or out-of-range labels.
  void Validate() const;
};

}  // namespace memlab

#endif  // MEMLAB_DATASET_HPP_
