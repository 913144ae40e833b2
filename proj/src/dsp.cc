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

#include "voxshield/dsp.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "voxshield/error.h"
#include "voxshield/simd/kernels.h"

namespace voxshield {

std::vector<double> HannWindow(std::size_t length) {
  if (length < 2) {
    throw Error(ErrorCode::kInvalidArgument, "Hann window length must be >= 2");
  }
  std::vector<double> w(length);
  const double denom = static_cast<double>(length - 1);
  for (std::size_t t = 0; t < length; ++t) {
    w[t] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * t / denom));
  }
  // Mirror so symmetry holds bit-exactly.
  for (std::size_t t = 0; t < length / 2; ++t) w[length - 1 - t] = w[t];
  return w;
}

std::vector<double> PeriodicHannWindow(std::size_t length) {
  if (length < 2) {
    throw Error(ErrorCode::kInvalidArgument, "Hann window length must be >= 2");
  }
  std::vector<double> w(length);
  for (std::size_t t = 0; t < length; ++t) {
    w[t] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * t /
                                 static_cast<double>(length)));
  }
  return w;
}

std::size_t FrameCount(std::size_t n, std::size_t window, std::size_t hop) {
  if (n < window || hop == 0) return 0;
  return 1 + (n - window) / hop;
}

StftPlan::StftPlan(std::vector<double> window, std::size_t hop, std::size_t nfft)
    : window_(std::move(window)), hop_(hop), fft_(nfft) {
  if (hop_ == 0) throw Error(ErrorCode::kInvalidArgument, "hop must be positive");
  if (window_.empty() || nfft < window_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "nfft must be >= window length");
  }
}

Spectrogram StftPlan::Forward(std::span<const double> x, int rate) const {
  const std::size_t frames = FrameCount(x.size(), window_.size(), hop_);
  if (frames == 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "signal shorter than one analysis window");
  }
  Spectrogram spec;
  spec.frames = frames;
  spec.bins = bins();
  spec.window = window_.size();
  spec.hop = hop_;
  spec.nfft = nfft();
  spec.rate = rate;
  spec.values.resize(frames * spec.bins);

  std::vector<std::complex<double>> buffer(nfft());
  for (std::size_t m = 0; m < frames; ++m) {
    std::fill(buffer.begin(), buffer.end(), std::complex<double>{});
    const double* frame = x.data() + m * hop_;
    for (std::size_t t = 0; t < window_.size(); ++t) {
      buffer[t] = window_[t] * frame[t];
    }
    fft_.Forward(buffer);
    std::copy_n(buffer.begin(), spec.bins, spec.values.begin() + m * spec.bins);
  }
  return spec;
}

void StftPlan::Adjoint(std::span<const std::complex<double>> grad,
                       std::size_t frames, std::span<double> grad_x) const {
  const std::size_t nb = bins();
  if (grad.size() != frames * nb ||
      (frames > 0 && (frames - 1) * hop_ + window_.size() > grad_x.size())) {
    throw Error(ErrorCode::kInvalidArgument, "STFT adjoint shape mismatch");
  }
  std::vector<std::complex<double>> buffer(nfft());
  for (std::size_t m = 0; m < frames; ++m) {
    std::fill(buffer.begin(), buffer.end(), std::complex<double>{});
    std::copy_n(grad.begin() + m * nb, nb, buffer.begin());
    fft_.InverseUnscaled(buffer);
    double* out = grad_x.data() + m * hop_;
    for (std::size_t t = 0; t < window_.size(); ++t) {
      out[t] += window_[t] * buffer[t].real();
    }
  }
}

Spectrogram Stft(const AudioClip& clip, std::span<const double> window,
                 std::size_t hop, std::size_t nfft) {
  StftPlan plan(std::vector<double>(window.begin(), window.end()), hop, nfft);
  return plan.Forward(clip.samples, clip.rate);
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double MelToHz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

MelFilterbank MakeMelFilterbank(std::size_t nfft, int rate, std::size_t n_mels,
                                double f_min, double f_max) {
  if (n_mels < 1) throw Error(ErrorCode::kInvalidArgument, "n_mels must be >= 1");
  if (!(f_min >= 0.0 && f_min < f_max && f_max <= rate / 2.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "invalid mel frequency range: need 0 <= f_min < f_max <= rate/2");
  }
  MelFilterbank fb;
  fb.n_mels = n_mels;
  fb.bins = nfft / 2 + 1;
  fb.weights.assign(n_mels * fb.bins, 0.0);
  fb.support.assign(n_mels, {0, 0});

  const double mel_lo = HzToMel(f_min);
  const double mel_hi = HzToMel(f_max);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = MelToHz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                    static_cast<double>(n_mels + 1));
  }
  for (std::size_t f = 0; f < n_mels; ++f) {
    const double left = edges[f];
    const double center = edges[f + 1];
    const double right = edges[f + 2];
    std::size_t first = fb.bins;
    std::size_t last = 0;
    for (std::size_t b = 0; b < fb.bins; ++b) {
      const double hz = static_cast<double>(b) * rate / static_cast<double>(nfft);
      double w = 0.0;
      if (hz > left && hz <= center) {
        w = (hz - left) / (center - left);
      } else if (hz > center && hz < right) {
        w = (right - hz) / (right - center);
      }
      if (w > 0.0) {
        fb.weights[f * fb.bins + b] = w;
        first = std::min(first, b);
        last = b + 1;
      }
    }
    fb.support[f] = first < last ? std::make_pair(first, last)
                                 : std::make_pair(std::size_t{0}, std::size_t{0});
  }
  return fb;
}

LogMelFrontEnd::LogMelFrontEnd(const FeatureConfig& config)
    : config_(config),
      stft_(HannWindow(config.window), config.hop, config.nfft),
      mel_(MakeMelFilterbank(config.nfft, config.rate, config.n_mels,
                             config.f_min, config.f_max)) {
  if (!(config.energy_floor > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "energy floor must be positive");
  }
}

std::size_t LogMelFrontEnd::FramesFor(std::size_t n_samples) const {
  return FrameCount(n_samples, config_.window, config_.hop);
}

FeatureMap LogMelFrontEnd::Forward(std::span<const double> x,
                                   Cache* cache) const {
  Spectrogram spec = stft_.Forward(x, config_.rate);
  const std::size_t nb = spec.bins;
  FeatureMap out;
  out.frames = spec.frames;
  out.bins = mel_.n_mels;
  out.values.resize(out.frames * out.bins);
  std::vector<double> energies(out.frames * out.bins);
  std::vector<double> power(nb);
  const auto& kernels = simd::Active();
  for (std::size_t m = 0; m < spec.frames; ++m) {
    for (std::size_t b = 0; b < nb; ++b) power[b] = std::norm(spec.at(m, b));
    for (std::size_t f = 0; f < mel_.n_mels; ++f) {
      const auto [lo, hi] = mel_.support[f];
      const double e = kernels.dot(&mel_.weights[f * nb + lo], &power[lo], hi - lo);
      energies[m * out.bins + f] = e;
      out.values[m * out.bins + f] = std::log(std::max(e, config_.energy_floor));
    }
  }
  if (cache != nullptr) {
    cache->spectrum = std::move(spec);
    cache->energies = std::move(energies);
  }
  return out;
}

void LogMelFrontEnd::Backward(const Cache& cache, const FeatureMap& grad,
                              std::span<double> grad_x) const {
  const Spectrogram& spec = cache.spectrum;
  const std::size_t nb = spec.bins;
  if (grad.frames != spec.frames || grad.bins != mel_.n_mels) {
    throw Error(ErrorCode::kInvalidArgument, "feature gradient shape mismatch");
  }
  std::vector<std::complex<double>> grad_spec(spec.frames * nb);
  std::vector<double> grad_power(nb);
  const auto& kernels = simd::Active();
  for (std::size_t m = 0; m < spec.frames; ++m) {
    std::fill(grad_power.begin(), grad_power.end(), 0.0);
    for (std::size_t f = 0; f < mel_.n_mels; ++f) {
      const double e = cache.energies[m * mel_.n_mels + f];
      if (!(e > config_.energy_floor)) continue;
      const double g = grad.at(m, f) / e;
      const auto [lo, hi] = mel_.support[f];
      kernels.axpy(g, &mel_.weights[f * nb + lo], &grad_power[lo], hi - lo);
    }
    for (std::size_t b = 0; b < nb; ++b) {
      grad_spec[m * nb + b] = 2.0 * grad_power[b] * spec.at(m, b);
    }
  }
  stft_.Adjoint(grad_spec, spec.frames, grad_x);
}

FeatureMap LogMelFeatures(const AudioClip& clip, const FeatureConfig& config) {
  if (clip.rate != config.rate) {
    throw Error(ErrorCode::kRateMismatch,
                "clip rate " + std::to_string(clip.rate) +
                    " does not match feature rate " + std::to_string(config.rate));
  }
  return LogMelFrontEnd(config).Forward(clip.samples);
}

OctaveBandMatrix ThirdOctaveMatrix(std::size_t nfft, int rate) {
  OctaveBandMatrix obm;
  obm.bins = nfft / 2 + 1;
  obm.weights.assign(kNumOctaveBands * obm.bins, 0.0);
  obm.support.assign(kNumOctaveBands, {0, 0});
  std::vector<double> edges(kNumOctaveBands + 1);
  for (std::size_t k = 0; k <= kNumOctaveBands; ++k) {
    edges[k] = kLowestBandCenter *
               std::pow(2.0, (2.0 * static_cast<double>(k) - 1.0) / 6.0);
  }
  if (edges.back() > rate / 2.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "rate too low for the highest one-third octave band");
  }
  // Each edge snaps to the nearest bin (lower bin on ties); band k covers
  // bins [snap(lower edge), snap(upper edge)).
  const auto snap = [&](double hz) {
    std::size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < obm.bins; ++b) {
      const double d = std::abs(static_cast<double>(b) * rate / static_cast<double>(nfft) - hz);
      if (d < best_dist) {
        best_dist = d;
        best = b;
      }
    }
    return best;
  };
  for (std::size_t k = 0; k < kNumOctaveBands; ++k) {
    obm.center_frequencies.push_back(kLowestBandCenter *
                                     std::pow(2.0, static_cast<double>(k) / 3.0));
    const std::size_t first = snap(edges[k]);
    const std::size_t last = snap(edges[k + 1]);
    for (std::size_t b = first; b < last; ++b) obm.weights[k * obm.bins + b] = 1.0;
    if (first >= last) {
      throw Error(ErrorCode::kInvalidArgument,
                  "nfft too small: one-third octave band " + std::to_string(k) +
                      " contains no bins");
    }
    obm.support[k] = {first, last};
  }
  return obm;
}

LinearResampler::LinearResampler(std::size_t input_length, int rate,
                                 int target_rate)
    : input_length_(input_length) {
  if (rate <= 0 || target_rate <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "sample rates must be positive");
  }
  if (input_length == 0) {
    throw Error(ErrorCode::kInvalidArgument, "cannot resample an empty clip");
  }
  const auto n = static_cast<unsigned long long>(input_length);
  const auto r = static_cast<unsigned long long>(rate);
  const auto q = static_cast<unsigned long long>(target_rate);
  const std::size_t out_len = static_cast<std::size_t>(n * q / r);
  index_.resize(out_len);
  frac_.resize(out_len);
  for (std::size_t t = 0; t < out_len; ++t) {
    const unsigned long long num = t * r;
    index_[t] = static_cast<std::size_t>(num / q);
    frac_[t] = static_cast<double>(num % q) / static_cast<double>(q);
    if (index_[t] + 1 >= input_length) frac_[t] = 0.0;
  }
}

std::vector<double> LinearResampler::Forward(std::span<const double> x) const {
  if (x.size() != input_length_) {
    throw Error(ErrorCode::kLengthMismatch, "resampler input length mismatch");
  }
  std::vector<double> y(index_.size());
  for (std::size_t t = 0; t < y.size(); ++t) {
    const std::size_t i = index_[t];
    const double f = frac_[t];
    y[t] = f == 0.0 ? x[i] : x[i] * (1.0 - f) + x[i + 1] * f;
  }
  return y;
}

void LinearResampler::Adjoint(std::span<const double> grad_y,
                              std::span<double> grad_x) const {
  if (grad_y.size() != index_.size() || grad_x.size() != input_length_) {
    throw Error(ErrorCode::kLengthMismatch, "resampler adjoint shape mismatch");
  }
  for (std::size_t t = 0; t < grad_y.size(); ++t) {
    const std::size_t i = index_[t];
    const double f = frac_[t];
    if (f == 0.0) {
      grad_x[i] += grad_y[t];
    } else {
      grad_x[i] += grad_y[t] * (1.0 - f);
      grad_x[i + 1] += grad_y[t] * f;
    }
  }
}

AudioClip ResampleLinear(const AudioClip& clip, int target_rate) {
  LinearResampler resampler(clip.samples.size(), clip.rate, target_rate);
  return {resampler.Forward(clip.samples), target_rate};
}

}  // namespace voxshield
