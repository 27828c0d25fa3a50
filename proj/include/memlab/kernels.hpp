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

#ifndef MEMLAB_KERNELS_HPP_
#define MEMLAB_KERNELS_HPP_

#include <cstddef>

// Dense layer kernels. `serial` is the reference implementation; `parallel`
// splits the same loops across OpenMP threads by output row. Every output
// element is produced by one thread with the same summation order as the
// serial loop, so both variants are bitwise identical.
//
// Layout: x is n x d, w is k x d (row = output unit), y is n x k.
namespace memlab::kernels {

namespace serial {

// y = x w^T + b
void LinearForward(const double* x, const double* w, const double* b,
                   std::size_t n, std::size_t d, std::size_t k, double* y);
// dx += dy w
void LinearBackwardInput(const double* dy, const double* w, std::size_t n,
                         std::size_t d, std::size_t k, double* dx);
// dw += dy^T x, db += column sums of dy
void LinearBackwardParams(const double* dy, const double* x, std::size_t n,
                          std::size_t d, std::size_t k, double* dw,
                          double* db);

}  // namespace serial

namespace parallel {

void LinearForward(const double* x, const double* w, const double* b,
                   std::size_t n, std::size_t d, std::size_t k, double* y);
void LinearBackwardInput(const double* dy, const double* w, std::size_t n,
                         std::size_t d, std::size_t k, double* dx);
void LinearBackwardParams(const double* dy, const double* x, std::size_t n,
                          std::size_t d, std::size_t k, double* dw,
                          double* db);

}  // namespace parallel

// Multiply-add count above which the dispatchers below use the parallel
// variant. Small layers stay serial; thread start-up dominates there.
inline constexpr std::size_t kParallelWorkThreshold = 1 << 18;

void LinearForward(const double* x, const double* w, const double* b,
                   std::size_t n, std::size_t d, std::size_t k, double* y);
void LinearBackwardInput(const double* dy, const double* w, std::size_t n,
                         std::size_t d, std::size_t k, double* dx);
void LinearBackwardParams(const double* dy, const double* x, std::size_t n,
                          std::size_t d, std::size_t k, double* dw,
                          double* db);

}  // namespace memlab::kernels

#endif  // MEMLAB_KERNELS_HPP_
