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

#ifndef VOXSHIELD_SIMD_KERNELS_H_
#define VOXSHIELD_SIMD_KERNELS_H_

#include <cstddef>
#include <cstdint>
#include <span>

// Data-parallel inner loops used by the feature front-end, the encoder and
// the perturbation update. Every kernel has a scalar reference version;
// vector versions are selected once at runtime from the CPU features and
// must agree with the reference (exactly for the elementwise kernels, to
// rounding for the reductions).

namespace voxshield::simd {

enum class Isa { kScalar, kAvx2, kNeon };

const char* IsaName(Isa isa);

struct KernelTable {
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y[i] = max(x[i], 0)
  void (*relu)(const double* x, double* y, std::size_t n);
  // delta[i] -= eta * sign(grad[i])
  void (*signed_step)(const double* grad, double eta, double* delta,
                      std::size_t n);
  // delta[i] = clamp(delta[i], -eps, eps) * mask[i], mask entries 0 or 1
  void (*clamp_mask)(double eps, const std::uint8_t* mask, double* delta,
                     std::size_t n);
};

const KernelTable& ScalarKernels();
// nullptr when the ISA was not compiled in or the CPU lacks it.
const KernelTable* KernelsFor(Isa isa);
bool IsaAvailable(Isa isa);

// The table used by the library. Defaults to the best available ISA;
// VOXSHIELD_ISA=scalar|avx2|neon in the environment overrides it.
Isa ActiveIsa();
const KernelTable& Active();
// Returns false (and leaves the selection alone) if the ISA is unavailable.
bool SetActiveIsa(Isa isa);

inline double Dot(std::span<const double> a, std::span<const double> b) {
  return Active().dot(a.data(), b.data(), a.size());
}

inline void Axpy(double alpha, std::span<const double> x,
                 std::span<double> y) {
  Active().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace voxshield::simd

#endif  // VOXSHIELD_SIMD_KERNELS_H_
