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

// Compiled with -mavx2 -mfma; only reached after a CPUID check.

#include <immintrin.h>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstring>

#include "voxshield/simd/kernels.h"

namespace voxshield::simd {
namespace {

double DotAvx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i),
                           acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4),
                           _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i),
                           acc0);
  }
  acc0 = _mm256_add_pd(acc0, acc1);
  const __m128d lo = _mm256_castpd256_pd128(acc0);
  const __m128d hi = _mm256_extractf128_pd(acc0, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  double acc = _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void AxpyAvx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(
        y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i),
                               _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void ReluAvx2(const double* x, double* y, std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
  }
  for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void SignedStepAvx2(const double* grad, double eta, double* delta,
                    std::size_t n) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d veta = _mm256_set1_pd(eta);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d g = _mm256_loadu_pd(grad + i);
    const __m256d pos = _mm256_and_pd(_mm256_cmp_pd(g, zero, _CMP_GT_OQ), one);
    const __m256d neg = _mm256_and_pd(_mm256_cmp_pd(g, zero, _CMP_LT_OQ), one);
    const __m256d s = _mm256_sub_pd(pos, neg);
    _mm256_storeu_pd(delta + i,
                     _mm256_fnmadd_pd(veta, s, _mm256_loadu_pd(delta + i)));
  }
  for (; i < n; ++i) {
    const double s = grad[i] > 0.0 ? 1.0 : (grad[i] < 0.0 ? -1.0 : 0.0);
    delta[i] -= eta * s;
  }
}

void ClampMaskAvx2(double eps, const std::uint8_t* mask, double* delta,
                   std::size_t n) {
  const __m256d hi = _mm256_set1_pd(eps);
  const __m256d lo = _mm256_set1_pd(-eps);
  const __m256i zero = _mm256_setzero_si256();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    std::int32_t bytes;
    std::memcpy(&bytes, mask + i, sizeof(bytes));
    const __m256i m64 = _mm256_cvtepu8_epi64(_mm_cvtsi32_si128(bytes));
    const __m256d off = _mm256_castsi256_pd(_mm256_cmpeq_epi64(m64, zero));
    __m256d d = _mm256_loadu_pd(delta + i);
    d = _mm256_min_pd(_mm256_max_pd(d, lo), hi);
    _mm256_storeu_pd(delta + i, _mm256_andnot_pd(off, d));
  }
  for (; i < n; ++i) {
    delta[i] = mask[i] ? std::clamp(delta[i], -eps, eps) : 0.0;
  }
}

}  // namespace

const KernelTable& Avx2Kernels() {
  static const KernelTable table = {DotAvx2, AxpyAvx2, ReluAvx2,
                                    SignedStepAvx2, ClampMaskAvx2};
  return table;
}

}  // namespace voxshield::simd
