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

#include <atomic>
#include <cstdlib>
#include <string_view>

#include "voxshield/simd/kernels.h"

namespace voxshield::simd {

#if defined(VOXSHIELD_HAVE_AVX2)
const KernelTable& Avx2Kernels();
#endif
#if defined(VOXSHIELD_HAVE_NEON)
const KernelTable& NeonKernels();
#endif

namespace {

Isa DetectBest() {
  if (IsaAvailable(Isa::kAvx2)) return Isa::kAvx2;
  if (IsaAvailable(Isa::kNeon)) return Isa::kNeon;
  return Isa::kScalar;
}

Isa InitialIsa() {
  Isa isa = DetectBest();
  if (const char* env = std::getenv("VOXSHIELD_ISA")) {
    const std::string_view want(env);
    Isa requested = isa;
    if (want == "scalar") requested = Isa::kScalar;
    if (want == "avx2") requested = Isa::kAvx2;
    if (want == "neon") requested = Isa::kNeon;
    if (IsaAvailable(requested)) isa = requested;
  }
  return isa;
}

std::atomic<Isa>& Selected() {
  static std::atomic<Isa> selected{InitialIsa()};
  return selected;
}

std::atomic<const KernelTable*>& SelectedTable() {
  static std::atomic<const KernelTable*> table{KernelsFor(Selected().load())};
  return table;
}

}  // namespace

const char* IsaName(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
    case Isa::kNeon:
      return "neon";
  }
  return "unknown";
}

bool IsaAvailable(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(VOXSHIELD_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::kNeon:
#if defined(VOXSHIELD_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable* KernelsFor(Isa isa) {
  if (!IsaAvailable(isa)) return nullptr;
  switch (isa) {
    case Isa::kScalar:
      return &ScalarKernels();
    case Isa::kAvx2:
#if defined(VOXSHIELD_HAVE_AVX2)
      return &Avx2Kernels();
#else
      return nullptr;
#endif
    case Isa::kNeon:
#if defined(VOXSHIELD_HAVE_NEON)
      return &NeonKernels();
#else
      return nullptr;
#endif
  }
  return nullptr;
}

Isa ActiveIsa() { return Selected().load(std::memory_order_relaxed); }

const KernelTable& Active() {
  return *SelectedTable().load(std::memory_order_relaxed);
}

bool SetActiveIsa(Isa isa) {
  if (!IsaAvailable(isa)) return false;
  Selected().store(isa, std::memory_order_relaxed);
  SelectedTable().store(KernelsFor(isa), std::memory_order_relaxed);
  return true;
}

}  // namespace voxshield::simd
