// Copyright 2026 The voxshield Authors
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

#include <algorithm>
#include <cstddef>
#include <cstdint>

#include "voxshield/simd/kernels.h"

namespace voxshield::simd {
namespace {

double DotScalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void AxpyScalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void ReluScalar(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void SignedStepScalar(const double* grad, double eta, double* delta,
                      std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double s = grad[i] > 0.0 ? 1.0 : (grad[i] < 0.0 ? -1.0 : 0.0);
    delta[i] -= eta * s;
  }
}

void ClampMaskScalar(double eps, const std::uint8_t* mask, double* delta,
                     std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    delta[i] = mask[i] ? std::clamp(delta[i], -eps, eps) : 0.0;
  }
}

}  // namespace

const KernelTable& ScalarKernels() {
  static const KernelTable table = {DotScalar, AxpyScalar, ReluScalar,
                                    SignedStepScalar, ClampMaskScalar};
  return table;
}

}  // namespace voxshield::simd
