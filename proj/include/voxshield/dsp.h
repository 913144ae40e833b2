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

#ifndef VOXSHIELD_DSP_H_
#define VOXSHIELD_DSP_H_

#include <complex>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "voxshield/audio_io.h"
#include "voxshield/fft.h"

namespace voxshield {

inline constexpr int kPipelineRate = 16000;

// Symmetric Hann window, w[t] = 0.5 (1 - cos(2 pi t / (length - 1))).
std::vector<double> HannWindow(std::size_t length);
// Periodic Hann window, w[t] = 0.5 (1 - cos(2 pi t / length)); overlap-adds
// to exactly 1 at 50% hop.
std::vector<double> PeriodicHannWindow(std::size_t length);

// Frames start at sample 0 and are `hop` apart; there is no centre padding.
// Returns 0 when n < window.
std::size_t FrameCount(std::size_t n, std::size_t window, std::size_t hop);

struct Spectrogram {
  std::size_t frames = 0;
  std::size_t bins = 0;  // nfft / 2 + 1
  std::size_t window = 0;
  std::size_t hop = 0;
  std::size_t nfft = 0;
  int rate = 0;
  std::vector<std::complex<double>> values;  // frames x bins, row-major

  const std::complex<double>& at(std::size_t m, std::size_t b) const {
    return values[m * bins + b];
  }
  double BinFrequency(std::size_t b) const {
    return static_cast<double>(b) * rate / static_cast<double>(nfft);
  }
};

// A reusable short-time Fourier transform with a fixed window, hop and FFT
// length, plus its adjoint for back-propagation.
class StftPlan {
 public:
  StftPlan(std::vector<double> window, std::size_t hop, std::size_t nfft);

  std::size_t window_length() const { return window_.size(); }
  std::size_t hop() const { return hop_; }
  std::size_t nfft() const { return fft_.size(); }
  std::size_t bins() const { return fft_.size() / 2 + 1; }
  const std::vector<double>& window() const { return window_; }

  // frame m, bin b = sum_t w[t] x[m hop + t] exp(-2 pi i b t / nfft)
  Spectrogram Forward(std::span<const double> x, int rate) const;

  // `grad` holds dL/dRe + i dL/dIm for each (frame, bin). Accumulates dL/dx
  // into grad_x, which must be as long as the analysed signal.
  void Adjoint(std::span<const std::complex<double>> grad, std::size_t frames,
               std::span<double> grad_x) const;

 private:
  std::vector<double> window_;
  std::size_t hop_;
  Fft fft_;
};

Spectrogram Stft(const AudioClip& clip, std::span<const double> window,
                 std::size_t hop, std::size_t nfft);

double HzToMel(double hz);
double MelToHz(double mel);

// Triangular filters on the mel scale, row-major n_mels x bins. `support`
// holds the [first, last) bin range of the non-zero weights of each row.
struct MelFilterbank {
  std::size_t n_mels = 0;
  std::size_t bins = 0;
  std::vector<double> weights;
  std::vector<std::pair<std::size_t, std::size_t>> support;

  double at(std::size_t f, std::size_t b) const { return weights[f * bins + b]; }
};

MelFilterbank MakeMelFilterbank(std::size_t nfft, int rate, std::size_t n_mels,
                                double f_min, double f_max);

struct FeatureConfig {
  int rate = kPipelineRate;
  std::size_t window = 400;
  std::size_t hop = 160;
  std::size_t nfft = 512;
  std::size_t n_mels = 40;
  double f_min = 20.0;
  double f_max = 8000.0;
  double energy_floor = 1e-10;
};

// Frame-major real matrix (frames x bins).
struct FeatureMap {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<double> values;

  double& at(std::size_t m, std::size_t f) { return values[m * bins + f]; }
  double at(std::size_t m, std::size_t f) const { return values[m * bins + f]; }
};

// log(max(mel . |STFT|^2, floor)) with an exact reverse pass.
class LogMelFrontEnd {
 public:
  explicit LogMelFrontEnd(const FeatureConfig& config);

  struct Cache {
    Spectrogram spectrum;
    std::vector<double> energies;  // frames x n_mels, before the floor
  };

  const FeatureConfig& config() const { return config_; }
  std::size_t FramesFor(std::size_t n_samples) const;

  FeatureMap Forward(std::span<const double> x, Cache* cache = nullptr) const;
  // Accumulates dL/dx into grad_x given dL/d(features).
  void Backward(const Cache& cache, const FeatureMap& grad,
                std::span<double> grad_x) const;

 private:
  FeatureConfig config_;
  StftPlan stft_;
  MelFilterbank mel_;
};

// Throws kRateMismatch if the clip rate differs from config.rate.
FeatureMap LogMelFeatures(const AudioClip& clip, const FeatureConfig& config);

inline constexpr std::size_t kNumOctaveBands = 15;
inline constexpr double kLowestBandCenter = 150.0;

// One-third octave bands with centres 150 * 2^(k/3). The edges cf 2^(-1/6)
// and cf 2^(1/6) snap to the nearest bin; row k has weight 1 on bins from
// the snapped lower edge up to (excluding) the snapped upper edge.
struct OctaveBandMatrix {
  std::size_t bins = 0;
  std::vector<double> center_frequencies;
  std::vector<double> weights;  // kNumOctaveBands x bins
  std::vector<std::pair<std::size_t, std::size_t>> support;
};

OctaveBandMatrix ThirdOctaveMatrix(std::size_t nfft, int rate);

// Linear interpolation at positions t * rate / target_rate.
class LinearResampler {
 public:
  LinearResampler(std::size_t input_length, int rate, int target_rate);

  std::size_t input_length() const { return input_length_; }
  std::size_t output_length() const { return index_.size(); }

  std::vector<double> Forward(std::span<const double> x) const;
  // Accumulates the transpose product into grad_x.
  void Adjoint(std::span<const double> grad_y, std::span<double> grad_x) const;

 private:
  std::size_t input_length_;
  std::vector<std::size_t> index_;
  std::vector<double> frac_;
};

AudioClip ResampleLinear(const AudioClip& clip, int target_rate);

}  // namespace voxshield

#endif  // VOXSHIELD_DSP_H_
