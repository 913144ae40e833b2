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

#include "voxshield/perceptual.h"

#include <cmath>
#include <complex>
#include <string>

#include "voxshield/error.h"

namespace voxshield {
namespace {

void CheckSameLength(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(ErrorCode::kLengthMismatch,
                "signal lengths differ (" + std::to_string(a) + " vs " +
                    std::to_string(b) + ")");
  }
}

std::vector<double> StoiWindow() { return PeriodicHannWindow(kStoiFrame); }

// Indices of clean frames within kSilenceRangeDb of the loudest frame.
std::vector<std::size_t> ActiveFrames(std::span<const double> clean,
                                      std::span<const double> window) {
  const std::size_t frames = FrameCount(clean.size(), kStoiFrame, kStoiHop);
  std::vector<double> energy(frames, 0.0);
  double max_energy = 0.0;
  for (std::size_t m = 0; m < frames; ++m) {
    double e = 0.0;
    for (std::size_t t = 0; t < kStoiFrame; ++t) {
      const double v = window[t] * clean[m * kStoiHop + t];
      e += v * v;
    }
    energy[m] = e;
    max_energy = std::max(max_energy, e);
  }
  if (!(max_energy > 0.0)) {
    throw Error(ErrorCode::kSilentInput, "clean signal is entirely silent");
  }
  const double threshold = max_energy * std::pow(10.0, -kSilenceRangeDb / 10.0);
  std::vector<std::size_t> kept;
  for (std::size_t m = 0; m < frames; ++m) {
    if (energy[m] > threshold) kept.push_back(m);
  }
  return kept;
}

std::size_t TrimmedLength(std::size_t kept) {
  return kept == 0 ? 0 : (kept - 1) * kStoiHop + kStoiFrame;
}

std::vector<double> OverlapAddKept(std::span<const double> x,
                                   std::span<const std::size_t> kept,
                                   std::span<const double> window) {
  std::vector<double> out(TrimmedLength(kept.size()), 0.0);
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const double* src = x.data() + kept[k] * kStoiHop;
    double* dst = out.data() + k * kStoiHop;
    for (std::size_t t = 0; t < kStoiFrame; ++t) dst[t] += window[t] * src[t];
  }
  return out;
}

void OverlapAddAdjoint(std::span<const double> grad_out,
                       std::span<const std::size_t> kept,
                       std::span<const double> window,
                       std::span<double> grad_x) {
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const double* src = grad_out.data() + k * kStoiHop;
    double* dst = grad_x.data() + kept[k] * kStoiHop;
    for (std::size_t t = 0; t < kStoiFrame; ++t) dst[t] += window[t] * src[t];
  }
}

EnvelopeMatrix EnvelopesOf(const Spectrogram& spec,
                           const OctaveBandMatrix& bands) {
  EnvelopeMatrix env;
  env.frames = spec.frames;
  env.values.assign(env.bands * env.frames, 0.0);
  for (std::size_t j = 0; j < env.bands; ++j) {
    const auto [lo, hi] = bands.support[j];
    for (std::size_t m = 0; m < spec.frames; ++m) {
      double acc = 0.0;
      for (std::size_t b = lo; b < hi; ++b) {
        acc += bands.weights[j * bands.bins + b] * std::norm(spec.at(m, b));
      }
      env.values[j * env.frames + m] = std::sqrt(acc);
    }
  }
  return env;
}

double Norm2(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

}  // namespace

void PhlWeights::Validate() const {
  if (!(alpha >= 0.0 && beta >= 0.0 && gamma >= 0.0 && lambda >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "loss weights must be >= 0");
  }
}

// ---------------------------------------------------------------------------

StftDistance::StftDistance() : plan_(HannWindow(400), 160, 512) {}

double StftDistance::Evaluate(std::span<const double> clean,
                              std::span<const double> degraded,
                              std::span<double> grad, double scale) const {
  CheckSameLength(clean.size(), degraded.size());
  std::vector<double> diff(clean.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = degraded[i] - clean[i];
  Spectrogram spec = plan_.Forward(diff, 0);
  double energy = 0.0;
  for (const auto& v : spec.values) energy += std::norm(v);
  const double value = std::sqrt(energy);
  if (!grad.empty() && value > 0.0) {
    CheckSameLength(grad.size(), degraded.size());
    const double k = scale / value;
    for (auto& v : spec.values) v *= k;
    plan_.Adjoint(spec.values, spec.frames, grad);
  }
  return value;
}

double StftLoss(const AudioClip& clean, const AudioClip& degraded) {
  if (clean.rate != degraded.rate) {
    throw Error(ErrorCode::kRateMismatch, "sample rates differ");
  }
  return StftDistance().Evaluate(clean.samples, degraded.samples);
}

// ---------------------------------------------------------------------------

std::pair<AudioClip, AudioClip> RemoveSilentFrames(const AudioClip& clean,
                                                   const AudioClip& degraded) {
  if (clean.rate != kStoiRate || degraded.rate != kStoiRate) {
    throw Error(ErrorCode::kRateMismatch, "silent-frame removal expects 10 kHz");
  }
  CheckSameLength(clean.size(), degraded.size());
  if (clean.size() < kStoiFrame) {
    throw Error(ErrorCode::kInvalidArgument, "clip shorter than one frame");
  }
  const std::vector<double> window = StoiWindow();
  const std::vector<std::size_t> kept = ActiveFrames(clean.samples, window);
  return {AudioClip{OverlapAddKept(clean.samples, kept, window), kStoiRate},
          AudioClip{OverlapAddKept(degraded.samples, kept, window), kStoiRate}};
}

EnvelopeMatrix BandEnvelopes(const AudioClip& clip) {
  if (clip.rate != kStoiRate) {
    throw Error(ErrorCode::kRateMismatch, "band envelopes expect 10 kHz");
  }
  if (clip.size() < kStoiFrame) {
    throw Error(ErrorCode::kInvalidArgument, "clip shorter than one frame");
  }
  const StftPlan plan(StoiWindow(), kStoiHop, kStoiNfft);
  return EnvelopesOf(plan.Forward(clip.samples, kStoiRate),
                     ThirdOctaveMatrix(kStoiNfft, kStoiRate));
}

StoiReference::StoiReference(const AudioClip& clean)
    : length_(clean.size()),
      rate_(clean.rate),
      resampler_(clean.size(), clean.rate, kStoiRate),
      frame_window_(StoiWindow()),
      stft_(StoiWindow(), kStoiHop, kStoiNfft),
      bands_(ThirdOctaveMatrix(kStoiNfft, kStoiRate)) {
  const std::vector<double> clean10 = resampler_.Forward(clean.samples);
  if (clean10.size() < kStoiFrame) {
    throw Error(ErrorCode::kInvalidArgument, "clip too short for STOI");
  }
  kept_frames_ = ActiveFrames(clean10, frame_window_);
  trimmed_length_ = TrimmedLength(kept_frames_.size());
  const std::vector<double> trimmed =
      OverlapAddKept(clean10, kept_frames_, frame_window_);
  if (FrameCount(trimmed.size(), kStoiFrame, kStoiHop) < kEnvelopeFrames) {
    throw Error(ErrorCode::kInvalidArgument,
                "too few non-silent frames for an intelligibility estimate");
  }
  clean_env_ = EnvelopesOf(stft_.Forward(trimmed, kStoiRate), bands_);
}

StoiResult StoiReference::Evaluate(std::span<const double> degraded,
                                   double lambda, std::span<double> grad,
                                   double scale) const {
  CheckSameLength(degraded.size(), length_);
  const bool want_grad = !grad.empty();
  if (want_grad) CheckSameLength(grad.size(), length_);

  const std::vector<double> y10 = resampler_.Forward(degraded);
  const std::vector<double> trimmed =
      OverlapAddKept(y10, kept_frames_, frame_window_);
  const Spectrogram spec = stft_.Forward(trimmed, kStoiRate);
  const EnvelopeMatrix env = EnvelopesOf(spec, bands_);

  const std::size_t J = env.bands;
  const std::size_t M = env.frames;
  const std::size_t N = kEnvelopeFrames;
  const double clip_factor = 1.0 + std::pow(10.0, kEnvelopeClipDb / 20.0);

  // d(score)/dY before division by the number of cells.
  std::vector<double> grad_env(want_grad ? J * M : 0, 0.0);
  double corr_sum = 0.0;
  std::size_t cells = 0;
  std::vector<double> u(N), xc(N), uc(N), g(N);
  for (std::size_t j = 0; j < J; ++j) {
    const double* xrow = &clean_env_.values[j * M];
    const double* yrow = &env.values[j * M];
    for (std::size_t end = N - 1; end < M; ++end) {
      const double* x = xrow + end + 1 - N;
      const double* y = yrow + end + 1 - N;
      const double x_norm = Norm2({x, N});
      const double y_norm = Norm2({y, N});
      if (!(y_norm > 0.0)) continue;
      const double alpha = x_norm / y_norm;
      double x_mean = 0.0, u_mean = 0.0;
      for (std::size_t k = 0; k < N; ++k) {
        u[k] = std::min(alpha * y[k], clip_factor * x[k]);
        x_mean += x[k];
        u_mean += u[k];
      }
      x_mean /= N;
      u_mean /= N;
      double xx = 0.0, uu = 0.0, xu = 0.0;
      for (std::size_t k = 0; k < N; ++k) {
        xc[k] = x[k] - x_mean;
        uc[k] = u[k] - u_mean;
        xx += xc[k] * xc[k];
        uu += uc[k] * uc[k];
        xu += xc[k] * uc[k];
      }
      if (!(xx > 0.0) || !(uu > 0.0)) continue;
      const double x_len = std::sqrt(xx);
      const double u_len = std::sqrt(uu);
      const double r = xu / (x_len * u_len);
      corr_sum += r;
      ++cells;
      if (!want_grad) continue;

      // r = <xc, uc> / (|xc| |uc|); dr/du = (xc/|xc| - r uc/|uc|) / |uc|,
      // which already has zero mean. Clipped entries pass no gradient.
      double gy = 0.0;
      for (std::size_t k = 0; k < N; ++k) {
        const bool free = alpha * y[k] < clip_factor * x[k];
        g[k] = free ? (xc[k] / x_len - r * uc[k] / u_len) / u_len : 0.0;
        gy += g[k] * y[k];
      }
      // u = alpha(y) y with alpha = |x| / |y|.
      const double shrink = alpha * gy / (y_norm * y_norm);
      double* out = &grad_env[j * M + end + 1 - N];
      for (std::size_t k = 0; k < N; ++k) {
        out[k] += alpha * g[k] - shrink * y[k];
      }
    }
  }
  if (cells == 0) {
    throw Error(ErrorCode::kZeroEnergy,
                "no envelope segment with non-zero variance");
  }

  StoiResult result;
  result.score = corr_sum / static_cast<double>(cells);
  double l1 = 0.0;
  for (std::size_t i = 0; i < env.values.size(); ++i) {
    l1 += std::abs(clean_env_.values[i] - env.values[i]);
  }
  result.envelope_l1 = l1 / static_cast<double>(M * J);
  result.loss = (1.0 - result.score) * (1.0 - result.score) +
                lambda * result.envelope_l1;
  if (!want_grad) return result;

  const double d_score = -2.0 * (1.0 - result.score) * scale /
                         static_cast<double>(cells);
  const double d_l1 = lambda * scale / static_cast<double>(M * J);
  for (std::size_t i = 0; i < grad_env.size(); ++i) {
    const double diff = env.values[i] - clean_env_.values[i];
    const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
    grad_env[i] = d_score * grad_env[i] + d_l1 * sign;
  }

  std::vector<std::complex<double>> grad_spec(spec.values.size());
  for (std::size_t j = 0; j < J; ++j) {
    const auto [lo, hi] = bands_.support[j];
    for (std::size_t m = 0; m < M; ++m) {
      const double e = env.values[j * M + m];
      if (!(e > 0.0)) continue;
      const double k = grad_env[j * M + m] / e;
      for (std::size_t b = lo; b < hi; ++b) {
        grad_spec[m * spec.bins + b] +=
            k * bands_.weights[j * bands_.bins + b] * spec.at(m, b);
      }
    }
  }
  std::vector<double> grad_trimmed(trimmed.size(), 0.0);
  stft_.Adjoint(grad_spec, spec.frames, grad_trimmed);
  std::vector<double> grad_y10(y10.size(), 0.0);
  OverlapAddAdjoint(grad_trimmed, kept_frames_, frame_window_, grad_y10);
  resampler_.Adjoint(grad_y10, grad);
  return result;
}

std::vector<std::uint8_t> StoiReference::Regime(std::span<const double> degraded) const {
  CheckSameLength(degraded.size(), length_);
  const std::vector<double> trimmed =
      OverlapAddKept(resampler_.Forward(degraded), kept_frames_, frame_window_);
  const EnvelopeMatrix env = EnvelopesOf(stft_.Forward(trimmed, kStoiRate), bands_);
  const std::size_t M = env.frames;
  const std::size_t N = kEnvelopeFrames;
  const double clip_factor = 1.0 + std::pow(10.0, kEnvelopeClipDb / 20.0);
  std::vector<std::uint8_t> regime;
  for (std::size_t i = 0; i < env.values.size(); ++i) {
    const double diff = env.values[i] - clean_env_.values[i];
    regime.push_back(diff > 0.0 ? 2 : (diff < 0.0 ? 0 : 1));
  }
  for (std::size_t j = 0; j < env.bands; ++j) {
    const double* xrow = &clean_env_.values[j * M];
    const double* yrow = &env.values[j * M];
    for (std::size_t end = N - 1; end < M; ++end) {
      const double* x = xrow + end + 1 - N;
      const double* y = yrow + end + 1 - N;
      const double y_norm = Norm2({y, N});
      if (!(y_norm > 0.0)) continue;
      const double alpha = Norm2({x, N}) / y_norm;
      for (std::size_t k = 0; k < N; ++k) regime.push_back(alpha * y[k] < clip_factor * x[k]);
    }
  }
  return regime;
}

double StoiScore(const AudioClip& clean, const AudioClip& degraded) {
  if (clean.rate != degraded.rate) {
    throw Error(ErrorCode::kRateMismatch, "sample rates differ");
  }
  return StoiReference(clean).Evaluate(degraded.samples, 0.0).score;
}

double StoiLoss(const AudioClip& clean, const AudioClip& degraded,
                double lambda) {
  if (clean.rate != degraded.rate) {
    throw Error(ErrorCode::kRateMismatch, "sample rates differ");
  }
  return StoiReference(clean).Evaluate(degraded.samples, lambda).loss;
}

// ---------------------------------------------------------------------------

double SnrDb(std::span<const double> clean, std::span<const double> noise) {
  CheckSameLength(clean.size(), noise.size());
  double signal_energy = 0.0, noise_energy = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    signal_energy += clean[i] * clean[i];
    noise_energy += noise[i] * noise[i];
  }
  if (!(noise_energy > 0.0)) {
    throw Error(ErrorCode::kZeroEnergy, "zero noise energy");
  }
  if (!(signal_energy > 0.0)) {
    throw Error(ErrorCode::kZeroEnergy, "zero clean energy");
  }
  return 10.0 * std::log10(signal_energy / noise_energy);
}

double MeanSquaredError(std::span<const double> clean,
                        std::span<const double> protected_samples) {
  CheckSameLength(clean.size(), protected_samples.size());
  if (clean.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const double d = protected_samples[i] - clean[i];
    acc += d * d;
  }
  return acc / static_cast<double>(clean.size());
}

double ReportedMse(std::span<const double> clean,
                   std::span<const double> protected_samples) {
  return MeanSquaredError(clean, protected_samples) / 1e-6;
}

}  // namespace voxshield
