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

#ifndef VOXSHIELD_SLEM_H_
#define VOXSHIELD_SLEM_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "voxshield/audio_io.h"
#include "voxshield/dsp.h"
#include "voxshield/encoder.h"
#include "voxshield/perceptual.h"

namespace voxshield {

enum class PerturbationMode { kSampleWise, kSpeakerWise };

struct SlemConfig {
  double epsilon = 0.005;
  std::size_t steps = 100;
  // Signed-gradient step; epsilon / 10 when unset.
  std::optional<double> step_size;
  double mask_keep_fraction = 0.5;
  std::size_t patch_length = kDefaultPatchLength;
  PhlWeights weights;
  PerturbationMode mode = PerturbationMode::kSampleWise;
  // Drops the perceptual terms (beta = gamma = 0).
  bool plain_slem = false;
  double margin = 0.2;
  double scale = 30.0;

  void Validate() const;
  double StepSize() const { return step_size.value_or(epsilon / 10.0); }
  PhlWeights EffectiveWeights() const;
};

// The loss terms at one delta. Components are unweighted.
struct LossBreakdown {
  double total = 0.0;
  double arc = 0.0;
  double stft = 0.0;
  double stoi = 0.0;
};

// An additive perturbation over the fixed patch. |delta| <= epsilon
// everywhere and delta is exactly zero where mask is 0.
struct Perturbation {
  std::vector<double> delta;
  std::vector<std::uint8_t> mask;
  double epsilon = 0.0;
  int rate = kPipelineRate;
  PerturbationMode mode = PerturbationMode::kSampleWise;
  int speaker = -1;
  LossBreakdown initial;
  LossBreakdown final;

  double MaxAbs() const;
};

// ceil(q n) ones at the largest |x|, ties to the lower index.
std::vector<std::uint8_t> AmplitudeMask(std::span<const double> x, double q);

// clamp(delta, -eps, eps) * mask.
std::vector<double> Project(std::span<const double> delta, double epsilon,
                            std::span<const std::uint8_t> mask);

// The hybrid objective for one clean patch against a frozen encoder:
//   alpha * AAM(g(logmel(x + delta)), y) + beta * STFT(x, x + delta)
//     + gamma * STOI_loss(x, x + delta; lambda)
class ProtectionObjective {
 public:
  ProtectionObjective(const EncoderParams& params, const AudioClip& clean_patch,
                      int label, const PhlWeights& weights, double margin,
                      double scale);

  std::size_t size() const { return clean_.size(); }

  LossBreakdown Evaluate(std::span<const double> delta) const;

  // Exact gradient of the weighted total w.r.t. delta (terms with zero
  // weight are skipped). Throws kNonFiniteGradient naming the component.
  std::vector<double> Gradient(std::span<const double> delta) const;

  // Gradient of one unweighted component: "arc", "stft" or "stoi".
  std::vector<double> ComponentGradient(std::span<const double> delta,
                                        std::string_view component) const;

 private:
  double ArcTerm(std::span<const double> x, std::span<double> grad,
                 double scale) const;

  const EncoderParams& params_;
  std::vector<double> clean_;
  int label_;
  PhlWeights weights_;
  double margin_;
  double scale_;
  LogMelFrontEnd front_end_;
  StftDistance stft_;
  std::optional<StoiReference> stoi_;
};

LossBreakdown TotalLoss(const EncoderParams& params, const AudioClip& clean_patch,
                        std::span<const double> delta, int label,
                        const PhlWeights& weights, double margin = 0.2,
                        double scale = 30.0);

std::vector<double> LossGradWrtDelta(const EncoderParams& params,
                                     const AudioClip& clean_patch,
                                     std::span<const double> delta, int label,
                                     const PhlWeights& weights,
                                     double margin = 0.2, double scale = 30.0);

// Signed-gradient descent on the objective from delta = 0, projecting onto
// the masked epsilon box after every step.
Perturbation GenerateSampleWise(const EncoderParams& params, const AudioClip& clip,
                                int label, const SlemConfig& config);

// One perturbation per speaker, optimized on that speaker's representative
// utterance. Throws kDuplicateEntry if a speaker appears twice.
std::map<int, Perturbation> GenerateSpeakerWise(
    const EncoderParams& params, std::span<const AudioClip> representatives,
    std::span<const int> labels, const SlemConfig& config);

// Uniform noise in [-eps, eps] on the amplitude mask of the clip's patch.
Perturbation UniformNoise(const AudioClip& clip, const SlemConfig& config,
                          std::uint64_t seed);

// Adds delta to the first patch samples (truncated for short clips) and
// clamps to [-1, 1]; later samples are copied unchanged.
AudioClip Apply(const AudioClip& clip, const Perturbation& perturbation);

}  // namespace voxshield

#endif  // VOXSHIELD_SLEM_H_
