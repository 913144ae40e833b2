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

#include "voxshield/fft.h"

#include <cmath>
#include <numbers>
#include <utility>

#include "voxshield/error.h"

namespace voxshield {
namespace {

// Plain complex product; avoids the inf/nan recovery path of operator*.
inline std::complex<double> Mul(std::complex<double> a, std::complex<double> b) {
  return {a.real() * b.real() - a.imag() * b.imag(),
          a.real() * b.imag() + a.imag() * b.real()};
}

}  // namespace

Fft::Fft(std::size_t n) : n_(n), radix2_(n > 0 && (n & (n - 1)) == 0) {
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "FFT size must be positive");
  twiddles_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(n);
    twiddles_[k] = {std::cos(angle), std::sin(angle)};
  }
  if (radix2_) {
    bit_reverse_.resize(n);
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < n) ++bits;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < bits; ++b) {
        if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
      }
      bit_reverse_[i] = r;
    }
  }
}

void Fft::Forward(std::span<std::complex<double>> data) const {
  Transform(data, false);
}

void Fft::InverseUnscaled(std::span<std::complex<double>> data) const {
  Transform(data, true);
}

void Fft::Transform(std::span<std::complex<double>> data, bool inverse) const {
  if (data.size() != n_) {
    throw Error(ErrorCode::kInvalidArgument, "FFT buffer size mismatch");
  }
  if (!radix2_) {
    std::vector<std::complex<double>> out(n_);
    for (std::size_t k = 0; k < n_; ++k) {
      std::complex<double> acc = 0.0;
      for (std::size_t t = 0; t < n_; ++t) {
        const auto w = twiddles_[(k * t) % n_];
        acc += Mul(data[t], inverse ? std::conj(w) : w);
      }
      out[k] = acc;
    }
    std::copy(out.begin(), out.end(), data.begin());
    return;
  }

  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t r = bit_reverse_[i];
    if (i < r) std::swap(data[i], data[r]);
  }
  for (std::size_t len = 2; len <= n_; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n_ / len;
    for (std::size_t start = 0; start < n_; start += len) {
      for (std::size_t j = 0; j < half; ++j) {
        std::complex<double> w = twiddles_[j * stride];
        if (inverse) w = std::conj(w);
        const std::complex<double> u = data[start + j];
        const std::complex<double> v = Mul(data[start + j + half], w);
        data[start + j] = u + v;
        data[start + j + half] = u - v;
      }
    }
  }
}

}  // namespace voxshield
