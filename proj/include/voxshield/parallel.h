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

#ifndef VOXSHIELD_PARALLEL_H_
#define VOXSHIELD_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace voxshield {

// Worker count for ParallelFor. 0 selects std::thread::hardware_concurrency.
void SetThreadCount(unsigned count);
unsigned ThreadCount();

// Runs body(i) for i in [0, n). Iterations must write disjoint outputs.
// If any iteration throws, the exception of the lowest failing index is
// rethrown after all workers finish.
void ParallelFor(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace voxshield

#endif  // VOXSHIELD_PARALLEL_H_
