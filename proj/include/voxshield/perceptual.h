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

#ifndef VOXSHIELD_PERCEPTUAL_H_
#define VOXSHIELD_PERCEPTUAL_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "voxshield/audio_io.h"
#include "voxshield/dsp.h"

namespace voxshield {

// Weights of the hybrid objective: alpha on the speaker loss, beta on the
// STFT distance, gamma on the intelligibility loss, and lambda on the
// envelope distance inside the intelligibility loss.
struct PhlWeights {
  double alpha = 1.0;
  double beta = 0.005;
  double gamma = 0.01;
  double lambda = 0.1;

  void Validate() const;
};

// ---------------------------------------------------------------------------
// STFT distance: || STFT(degraded) - STFT(clean) ||_2 over all frames and
// one-sided bins, using the feature front-end analysis (Hann 400 / hop 160 /
// nfft 512).

class StftDistance {
 public:
  StftDistance();

  // Accumulates scale * dL/d(degraded) into grad when it is non-empty. The
  // gradient at zero distance is taken as zero.
  double Evaluate(std::span<const double> clean,
                  std::span<const double> degraded,
                  std::span<double> grad = {}, double scale = 1.0) const;

 private:
  StftPlan plan_;
};

double StftLoss(const AudioClip& clean, const AudioClip& degraded);

// ---------------------------------------------------------------------------
// Short-time objective intelligibility.

inline constexpr int kStoiRate = 10000;
inline constexpr std::size_t kStoiFrame = 256;
inline constexpr std::size_t kStoiHop = 128;
inline constexpr std::size_t kStoiNfft = 512;
inline constexpr std::size_t kEnvelopeFrames = 30;
inline constexpr double kSilenceRangeDb = 40.0;
// Lower signal-to-distortion bound of -15 dB: degraded envelopes are clipped
// at (1 + 10^(15/20)) times the clean envelope.
inline constexpr double kEnvelopeClipDb = 15.0;

// Band envelopes X_j(m), bands x frames, row-major.
struct EnvelopeMatrix {
  std::size_t bands = kNumOctaveBands;
  std::size_t frames = 0;
  std::size_t window_frames = kEnvelopeFrames;
  std::vector<double> values;

  double at(std::size_t j, std::size_t m) const { return values[j * frames + m]; }
};

// Both clips at 10 kHz. Frames of the clean signal more than 40 dB below the
// loudest clean frame are dropped from both signals, and the remaining
// windowed frames are overlap-added back into waveforms.
std::pair<AudioClip, AudioClip> RemoveSilentFrames(const AudioClip& clean,
                                                   const AudioClip& degraded);

// Clip at 10 kHz; 256/128/512 STFT grouped into the 15 one-third octave
// bands by root-sum-square.
EnvelopeMatrix BandEnvelopes(const AudioClip& clip);

struct StoiResult {
  double score = 0.0;        // mean band-envelope correlation
  double envelope_l1 = 0.0;  // mean over frames of sum_j |X_j - X'_j| / J
  double loss = 0.0;         // (1 - score)^2 + lambda * envelope_l1
};

// Clean-side analysis done once; Evaluate can then be called for many
// degraded signals of the same length (the silent-frame pattern depends only
// on the clean signal).
class StoiReference {
 public:
  explicit StoiReference(const AudioClip& clean);

  std::size_t length() const { return length_; }
  int rate() const { return rate_; }

  // Accumulates scale * d(loss)/d(degraded) into grad when it is non-empty.
  StoiResult Evaluate(std::span<const double> degraded, double lambda,
                      std::span<double> grad = {}, double scale = 1.0) const;

  // Smoothness regime at `degraded`: the sign of every envelope difference
  // and the clip state of every segment entry. The loss is differentiable
  // along any path on which the regime stays constant.
  std::vector<std::uint8_t> Regime(std::span<const double> degraded) const;

 private:
  std::size_t length_;
  int rate_;
  LinearResampler resampler_;
  std::vector<double> frame_window_;
  std::vector<std::size_t> kept_frames_;
  std::size_t trimmed_length_ = 0;
  StftPlan stft_;
  OctaveBandMatrix bands_;
  EnvelopeMatrix clean_env_;
};

double StoiScore(const AudioClip& clean, const AudioClip& degraded);
double StoiLoss(const AudioClip& clean, const AudioClip& degraded,
                double lambda);

// ---------------------------------------------------------------------------
// Imperceptibility metrics.

// 10 log10(sum clean^2 / sum noise^2).
double SnrDb(std::span<const double> clean, std::span<const double> noise);

// Mean squared sample difference.
double MeanSquaredError(std::span<const double> clean,
                        std::span<const double> protected_samples);
// The same, expressed in units of 1e-6.
double ReportedMse(std::span<const double> clean,
                   std::span<const double> protected_samples);

}  // namespace voxshield

#endif  // VOXSHIELD_PERCEPTUAL_H_
