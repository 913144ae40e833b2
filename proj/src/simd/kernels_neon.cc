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

#include <arm_neon.h>

#include <algorithm>
#include <cstddef>
#include <cstdint>

#include "voxshield/simd/kernels.h"

namespace voxshield::simd {
namespace {

double DotNeon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void AxpyNeon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void ReluNeon(const double* x, double* y, std::size_t n) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t v = vld1q_f64(x + i);
    // Select rather than vmaxq so that -0.0 maps to +0.0 like the reference.
    vst1q_f64(y + i, vbslq_f64(vcgtq_f64(v, zero), v, zero));
  }
  for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void SignedStepNeon(const double* grad, double eta, double* delta,
                    std::size_t n) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  const float64x2_t one = vdupq_n_f64(1.0);
  const float64x2_t minus_one = vdupq_n_f64(-1.0);
  const float64x2_t veta = vdupq_n_f64(eta);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t g = vld1q_f64(grad + i);
    float64x2_t s = vbslq_f64(vcgtq_f64(g, zero), one, zero);
    s = vbslq_f64(vcltq_f64(g, zero), minus_one, s);
    vst1q_f64(delta + i, vsubq_f64(vld1q_f64(delta + i), vmulq_f64(veta, s)));
  }
  for (; i < n; ++i) {
    const double s = grad[i] > 0.0 ? 1.0 : (grad[i] < 0.0 ? -1.0 : 0.0);
    delta[i] -= eta * s;
  }
}

void ClampMaskNeon(double eps, const std::uint8_t* mask, double* delta,
                   std::size_t n) {
  const float64x2_t hi = vdupq_n_f64(eps);
  const float64x2_t lo = vdupq_n_f64(-eps);
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t d = vminq_f64(vmaxq_f64(vld1q_f64(delta + i), lo), hi);
    const uint64x2_t keep = {mask[i] ? ~0ULL : 0ULL,
                             mask[i + 1] ? ~0ULL : 0ULL};
    vst1q_f64(delta + i, vbslq_f64(keep, d, zero));
  }
  for (; i < n; ++i) {
    delta[i] = mask[i] ? std::clamp(delta[i], -eps, eps) : 0.0;
  }
}

}  // namespace

const KernelTable& NeonKernels() {
  static const KernelTable table = {DotNeon, AxpyNeon, ReluNeon,
                                    SignedStepNeon, ClampMaskNeon};
  return table;
}

}  // namespace voxshield::simd
