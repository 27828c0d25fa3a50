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

#ifndef MEMLAB_DATA_IO_HPP_
#define MEMLAB_DATA_IO_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>

#include "memlab/dataset.hpp"

namespace memlab {

enum class DatasetKind { kTwoGaussians, kRings, kXorGrid };

std::string DatasetKindName(DatasetKind kind);
// Accepts "two_gaussians", "rings", "xor_grid".
DatasetKind ParseDatasetKind(const std::string& name);

// Synthetic 2-D, 2-class data. Features are min-max mapped into [0, 1] per
// column (constant columns map to 0); classes alternate so they are balanced
// to within one sample. Deterministic in (kind, n, noise, seed).
//
//   two_gaussians: class means (-0.5, -0.5) and (0.5, 0.5), isotropic noise.
//   rings: radius 0.5 (class 0) and 1.0 (class 1), radial noise.
//   xor_grid: quadrant centres (+-0.5, +-0.5), label = quadrant parity.
Dataset GenerateDataset(DatasetKind kind, std::size_t n, double noise,
                        std::uint64_t seed);

// Header row, numeric feature columns, integer label in the last column.
// Features are validated finite and min-max normalized per column.
Dataset LoadCsv(const std::filesystem::path& path);

// Writes f0..f{d-1},label with shortest round-trip doubles.
void WriteDatasetCsv(const Dataset& data, std::ostream& out);

// Maps every column of `features` into [0, 1]; constant columns become 0.
void MinMaxNormalize(Tensor& features);

}  // namespace memlab

#endif  // MEMLAB_DATA_IO_HPP_
