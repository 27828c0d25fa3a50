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

#ifndef MEMLAB_RNG_HPP_
#define MEMLAB_RNG_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace memlab {

// Derives the seed of stream `index` under `base`. This is the splitmix64
// finalizer applied to base + golden_gamma * (index + 1), so any
// implementation can reproduce ensemble member seeds bit for bit:
//
//   z = base + 0x9E3779B97F4A7C15 * (index + 1)
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
std::uint64_t MixSeed(std::uint64_t base, std::uint64_t index);

// Seeded random source. The engine is std::mt19937_64, whose output sequence
// is fixed by the standard; the distributions below are written out here
// because the std:: ones are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double Uniform();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Standard normal via Box-Muller; one engine draw pair per call.
  double Normal();
  bool Bernoulli(double p) { return Uniform() < p; }
  // Unbiased integer in [0, n).
  std::size_t Index(std::size_t n);

  template <typename T>
  void Shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = Index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace memlab

#endif  // MEMLAB_RNG_HPP_
