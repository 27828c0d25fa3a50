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

// Serial reference vs OpenMP kernels for one dense layer.
//
//   memlab_bench --benchmark_filter=Forward
//
// Thread count follows OMP_NUM_THREADS.

#include <vector>

#include <benchmark/benchmark.h>

#include "memlab/kernels.hpp"
#include "memlab/rng.hpp"

namespace {

using namespace memlab;

struct Layer {
  std::size_t n, d, k;
  std::vector<double> x, w, b, y, dy, dx, dw, db;

  explicit Layer(const benchmark::State& state)
      : n(static_cast<std::size_t>(state.range(0))),
        d(static_cast<std::size_t>(state.range(1))),
        k(static_cast<std::size_t>(state.range(2))) {
    Rng rng(7);
    auto fill = [&](std::vector<double>& v, std::size_t size) {
      v.resize(size);
      for (double& e : v) e = rng.Uniform(-1.0, 1.0);
    };
    fill(x, n * d);
    fill(w, k * d);
    fill(b, k);
    fill(dy, n * k);
    y.assign(n * k, 0.0);
    dx.assign(n * d, 0.0);
    dw.assign(k * d, 0.0);
    db.assign(k, 0.0);
  }
};

template <auto Kernel>
void BM_Forward(benchmark::State& state) {
  Layer l(state);
  for (auto _ : state) {
    Kernel(l.x.data(), l.w.data(), l.b.data(), l.n, l.d, l.k, l.y.data());
    benchmark::DoNotOptimize(l.y.data());
  }
  state.SetItemsProcessed(state.iterations() * l.n * l.d * l.k);
}

template <auto Input, auto Params>
void BM_Backward(benchmark::State& state) {
  Layer l(state);
  for (auto _ : state) {
    Input(l.dy.data(), l.w.data(), l.n, l.d, l.k, l.dx.data());
    Params(l.dy.data(), l.x.data(), l.n, l.d, l.k, l.dw.data(), l.db.data());
    benchmark::DoNotOptimize(l.dx.data());
    benchmark::DoNotOptimize(l.dw.data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * l.n * l.d * l.k);
}

void Shapes(benchmark::internal::Benchmark* b) {
  b->Args({4, 32, 32})->Args({64, 32, 32})->Args({256, 64, 64})
      ->Args({1024, 128, 128})->Args({2000, 256, 256});
}

BENCHMARK(BM_Forward<kernels::serial::LinearForward>)
    ->Name("Forward/serial")->Apply(Shapes);
BENCHMARK(BM_Forward<kernels::parallel::LinearForward>)
    ->Name("Forward/parallel")->Apply(Shapes);
BENCHMARK(BM_Backward<kernels::serial::LinearBackwardInput,
                      kernels::serial::LinearBackwardParams>)
    ->Name("Backward/serial")->Apply(Shapes);
BENCHMARK(BM_Backward<kernels::parallel::LinearBackwardInput,
                      kernels::parallel::LinearBackwardParams>)
    ->Name("Backward/parallel")->Apply(Shapes);

}  // namespace

BENCHMARK_MAIN();
