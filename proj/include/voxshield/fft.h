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

#ifndef VOXSHIELD_FFT_H_
#define VOXSHIELD_FFT_H_

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace voxshield {

// In-place complex DFT of a fixed size. Power-of-two sizes use an iterative
// radix-2 transform; other sizes fall back to direct summation.
class Fft {
 public:
  explicit Fft(std::size_t n);

  std::size_t size() const { return n_; }

  // X[k] = sum_t x[t] exp(-2 pi i k t / n)
  void Forward(std::span<std::complex<double>> data) const;
  // x[t] = sum_k X[k] exp(+2 pi i k t / n), no 1/n scaling.
  void InverseUnscaled(std::span<std::complex<double>> data) const;

 private:
  void Transform(std::span<std::complex<double>> data, bool inverse) const;

  std::size_t n_;
  bool radix2_;
  std::vector<std::size_t> bit_reverse_;
  std::vector<std::complex<double>> twiddles_;  // exp(-2 pi i k / n)
};

}  // namespace voxshield

#endif  // VOXSHIELD_FFT_H_
