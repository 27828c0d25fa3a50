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

#include "memlab/kernels.hpp"

#include <omp.h>

namespace memlab::kernels {

namespace serial {

void LinearForward(const double* x, const double* w, const double* b,
                   std::size_t n, std::size_t d, std::size_t k, double* y) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x + i * d;
    double* yi = y + i * k;
    for (std::size_t o = 0; o < k; ++o) {
      const double* wo = w + o * d;
      double acc = b[o];
      for (std::size_t j = 0; j < d; ++j) acc += wo[j] * xi[j];
      yi[o] = acc;
    }
  }
}

void LinearBackwardInput(const double* dy, const double* w, std::size_t n,
                         std::size_t d, std::size_t k, double* dx) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* dyi = dy + i * k;
    double* dxi = dx + i * d;
    for (std::size_t o = 0; o < k; ++o) {
      const double g = dyi[o];
      if (g == 0.0) continue;
      const double* wo = w + o * d;
      for (std::size_t j = 0; j < d; ++j) dxi[j] += g * wo[j];
    }
  }
}

void LinearBackwardParams(const double* dy, const double* x, std::size_t n,
                          std::size_t d, std::size_t k, double* dw,
                          double* db) {
  for (std::size_t o = 0; o < k; ++o) {
    double* dwo = dw + o * d;
    double bias_acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double g = dy[i * k + o];
      bias_acc += g;
      if (g == 0.0) continue;
      const double* xi = x + i * d;
      for (std::size_t j = 0; j < d; ++j) dwo[j] += g * xi[j];
    }
    db[o] += bias_acc;
  }
}

}  // namespace serial

namespace parallel {

void LinearForward(const double* x, const double* w, const double* b,
                   std::size_t n, std::size_t d, std::size_t k, double* y) {
  const auto rows = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
  for (long long r = 0; r < rows; ++r) {
    const auto i = static_cast<std::size_t>(r);
    serial::LinearForward(x + i * d, w, b, 1, d, k, y + i * k);
  }
}

void LinearBackwardInput(const double* dy, const double* w, std::size_t n,
                         std::size_t d, std::size_t k, double* dx) {
  const auto rows = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
  for (long long r = 0; r < rows; ++r) {
    const auto i = static_cast<std::size_t>(r);
    serial::LinearBackwardInput(dy + i * k, w, 1, d, k, dx + i * d);
  }
}

void LinearBackwardParams(const double* dy, const double* x, std::size_t n,
                          std::size_t d, std::size_t k, double* dw,
                          double* db) {
  const auto units = static_cast<long long>(k);
#pragma omp parallel for schedule(static)
  for (long long u = 0; u < units; ++u) {
    const auto o = static_cast<std::size_t>(u);
    double* dwo = dw + o * d;
    double bias_acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double g = dy[i * k + o];
      bias_acc += g;
      if (g == 0.0) continue;
      const double* xi = x + i * d;
      for (std::size_t j = 0; j < d; ++j) dwo[j] += g * xi[j];
    }
    db[o] += bias_acc;
  }
}

}  // namespace parallel

namespace {

bool UseParallel(std::size_t n, std::size_t d, std::size_t k) {
  return n * d * k >= kParallelWorkThreshold && !omp_in_parallel() &&
         omp_get_max_threads() > 1;
}

}  // namespace

void LinearForward(const double* x, const double* w, const double* b,
                   std::size_t n, std::size_t d, std::size_t k, double* y) {
  if (UseParallel(n, d, k)) {
    parallel::LinearForward(x, w, b, n, d, k, y);
  } else {
    serial::LinearForward(x, w, b, n, d, k, y);
  }
}

void LinearBackwardInput(const double* dy, const double* w, std::size_t n,
                         std::size_t d, std::size_t k, double* dx) {
  if (UseParallel(n, d, k)) {
    parallel::LinearBackwardInput(dy, w, n, d, k, dx);
  } else {
    serial::LinearBackwardInput(dy, w, n, d, k, dx);
  }
}

void LinearBackwardParams(const double* dy, const double* x, std::size_t n,
                          std::size_t d, std::size_t k, double* dw,
                          double* db) {
  if (UseParallel(n, d, k)) {
    parallel::LinearBackwardParams(dy, x, n, d, k, dw, db);
  } else {
    serial::LinearBackwardParams(dy, x, n, d, k, dw, db);
  }
}

}  // namespace memlab::kernels
