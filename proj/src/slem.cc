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

#include "voxshield/slem.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "voxshield/error.h"
#include "voxshield/parallel.h"
#include "voxshield/random.h"
#include "voxshield/simd/kernels.h"

namespace voxshield {
namespace {

void CheckFinite(std::span<const double> grad, const char* component) {
  for (double g : grad) {
    if (!std::isfinite(g)) {
      throw Error(ErrorCode::kNonFiniteGradient,
                  std::string("non-finite gradient in ") + component);
    }
  }
}

std::vector<double> Add(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kLengthMismatch, "delta length does not match the patch");
  }
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

}  // namespace

void SlemConfig::Validate() const {
  if (!(epsilon >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must be >= 0");
  }
  if (!(mask_keep_fraction >= 0.0 && mask_keep_fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "mask keep fraction must lie in [0, 1]");
  }
  if (step_size && !(*step_size > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "step size must be > 0");
  }
  if (patch_length == 0) {
    throw Error(ErrorCode::kInvalidArgument, "patch length must be positive");
  }
  weights.Validate();
}

PhlWeights SlemConfig::EffectiveWeights() const {
  PhlWeights w = weights;
  if (plain_slem) w.beta = w.gamma = 0.0;
  return w;
}

double Perturbation::MaxAbs() const {
  double m = 0.0;
  for (double d : delta) m = std::max(m, std::abs(d));
  return m;
}

std::vector<std::uint8_t> AmplitudeMask(std::span<const double> x, double q) {
  if (x.empty()) throw Error(ErrorCode::kInvalidArgument, "empty clip");
  if (!(q >= 0.0 && q <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "mask keep fraction must lie in [0, 1]");
  }
  const double target = q * static_cast<double>(x.size());
  const double nearest = std::round(target);
  const auto keep = static_cast<std::size_t>(
      std::abs(target - nearest) < 1e-9 ? nearest : std::ceil(target));

  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(x[a]) > std::abs(x[b]);
  });
  std::vector<std::uint8_t> mask(x.size(), 0);
  for (std::size_t i = 0; i < keep; ++i) mask[order[i]] = 1;
  return mask;
}

std::vector<double> Project(std::span<const double> delta, double epsilon,
                            std::span<const std::uint8_t> mask) {
  if (delta.size() != mask.size()) {
    throw Error(ErrorCode::kLengthMismatch, "delta and mask lengths differ");
  }
  std::vector<double> out(delta.begin(), delta.end());
  simd::Active().clamp_mask(epsilon, mask.data(), out.data(), out.size());
  return out;
}

// ---------------------------------------------------------------------------

ProtectionObjective::ProtectionObjective(const EncoderParams& params,
                                         const AudioClip& clean_patch, int label,
                                         const PhlWeights& weights, double margin,
                                         double scale)
    : params_(params),
      clean_(clean_patch.samples),
      label_(label),
      weights_(weights),
      margin_(margin),
      scale_(scale),
      front_end_(params.config.Features()) {
  weights_.Validate();
  if (clean_patch.rate != kPipelineRate) {
    throw Error(ErrorCode::kRateMismatch, "protection expects 16 kHz audio");
  }
  if (label < 0 || static_cast<std::uint32_t>(label) >= params.config.num_speakers) {
    throw Error(ErrorCode::kInvalidArgument,
                "label " + std::to_string(label) + " outside the model's speakers");
  }
  try {
    stoi_.emplace(clean_patch);
  } catch (const Error&) {
    // Without a usable intelligibility reference the term can only be dropped.
    if (weights_.gamma > 0.0) throw;
  }
}

double ProtectionObjective::ArcTerm(std::span<const double> x,
                                    std::span<double> grad, double scale) const {
  LogMelFrontEnd::Cache fe_cache;
  const FeatureMap features = front_end_.Forward(x, &fe_cache);
  ForwardCache cache;
  const Embedding emb = Forward(params_, features, &cache);
  if (grad.empty()) return AamLoss(params_, emb, label_, margin_, scale_);

  std::vector<double> grad_emb(emb.values.size(), 0.0);
  const double loss = AamLoss(params_, emb, label_, margin_, scale_, grad_emb);
  for (double& g : grad_emb) g *= scale;
  FeatureMap grad_features{features.frames, features.bins,
                           std::vector<double>(features.values.size(), 0.0)};
  Backward(params_, cache, grad_emb, nullptr, &grad_features);
  front_end_.Backward(fe_cache, grad_features, grad);
  return loss;
}

LossBreakdown ProtectionObjective::Evaluate(std::span<const double> delta) const {
  const std::vector<double> x = Add(clean_, delta);
  LossBreakdown out;
  out.arc = ArcTerm(x, {}, 1.0);
  out.stft = stft_.Evaluate(clean_, x);
  out.stoi = stoi_ ? stoi_->Evaluate(x, weights_.lambda).loss
                   : std::numeric_limits<double>::quiet_NaN();
  out.total = weights_.alpha * out.arc + weights_.beta * out.stft;
  if (weights_.gamma > 0.0) out.total += weights_.gamma * out.stoi;
  return out;
}

std::vector<double> ProtectionObjective::Gradient(std::span<const double> delta) const {
  const std::vector<double> x = Add(clean_, delta);
  std::vector<double> total(x.size(), 0.0);
  std::vector<double> part(x.size());
  const auto accumulate = [&](const char* name) {
    CheckFinite(part, name);
    simd::Axpy(1.0, part, total);
  };
  if (weights_.alpha > 0.0) {
    std::fill(part.begin(), part.end(), 0.0);
    ArcTerm(x, part, weights_.alpha);
    accumulate("L_Arc");
  }
  if (weights_.beta > 0.0) {
    std::fill(part.begin(), part.end(), 0.0);
    stft_.Evaluate(clean_, x, part, weights_.beta);
    accumulate("L_stft");
  }
  if (weights_.gamma > 0.0) {
    std::fill(part.begin(), part.end(), 0.0);
    stoi_->Evaluate(x, weights_.lambda, part, weights_.gamma);
    accumulate("L_stoi");
  }
  return total;
}

std::vector<double> ProtectionObjective::ComponentGradient(
    std::span<const double> delta, std::string_view component) const {
  const std::vector<double> x = Add(clean_, delta);
  std::vector<double> grad(x.size(), 0.0);
  if (component == "arc") {
    ArcTerm(x, grad, 1.0);
  } else if (component == "stft") {
    stft_.Evaluate(clean_, x, grad, 1.0);
  } else if (component == "stoi") {
    if (!stoi_) throw Error(ErrorCode::kSilentInput, "no intelligibility reference");
    stoi_->Evaluate(x, weights_.lambda, grad, 1.0);
  } else {
    throw Error(ErrorCode::kInvalidArgument,
                "unknown loss component " + std::string(component));
  }
  CheckFinite(grad, std::string(component).c_str());
  return grad;
}

LossBreakdown TotalLoss(const EncoderParams& params, const AudioClip& clean_patch,
                        std::span<const double> delta, int label,
                        const PhlWeights& weights, double margin, double scale) {
  return ProtectionObjective(params, clean_patch, label, weights, margin, scale)
      .Evaluate(delta);
}

std::vector<double> LossGradWrtDelta(const EncoderParams& params,
                                     const AudioClip& clean_patch,
                                     std::span<const double> delta, int label,
                                     const PhlWeights& weights, double margin,
                                     double scale) {
  return ProtectionObjective(params, clean_patch, label, weights, margin, scale)
      .Gradient(delta);
}

// ---------------------------------------------------------------------------

Perturbation GenerateSampleWise(const EncoderParams& params, const AudioClip& clip,
                                int label, const SlemConfig& config) {
  config.Validate();
  if (clip.rate != kPipelineRate) {
    throw Error(ErrorCode::kRateMismatch, "protection expects 16 kHz audio");
  }
  const AudioClip patch = CropFixedPatch(clip, config.patch_length);
  const ProtectionObjective objective(params, patch, label, config.EffectiveWeights(),
                                      config.margin, config.scale);
  Perturbation p;
  p.mask = AmplitudeMask(patch.samples, config.mask_keep_fraction);
  p.delta.assign(patch.size(), 0.0);
  p.epsilon = config.epsilon;
  p.rate = clip.rate;
  p.mode = PerturbationMode::kSampleWise;
  p.speaker = label;
  p.initial = objective.Evaluate(p.delta);

  const double eta = config.StepSize();
  const auto& kernels = simd::Active();
  if (config.epsilon > 0.0 && eta > 0.0) {
    for (std::size_t k = 0; k < config.steps; ++k) {
      const std::vector<double> grad = objective.Gradient(p.delta);
      kernels.signed_step(grad.data(), eta, p.delta.data(), p.delta.size());
      kernels.clamp_mask(config.epsilon, p.mask.data(), p.delta.data(), p.delta.size());
    }
  }
  p.final = config.steps > 0 && config.epsilon > 0.0 ? objective.Evaluate(p.delta)
                                                     : p.initial;
  return p;
}

std::map<int, Perturbation> GenerateSpeakerWise(
    const EncoderParams& params, std::span<const AudioClip> representatives,
    std::span<const int> labels, const SlemConfig& config) {
  if (representatives.size() != labels.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "need exactly one label per representative clip");
  }
  std::map<int, std::size_t> index;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!index.emplace(labels[i], i).second) {
      throw Error(ErrorCode::kDuplicateEntry,
                  "speaker " + std::to_string(labels[i]) +
                      " has more than one representative");
    }
  }
  std::vector<Perturbation> generated(representatives.size());
  ParallelFor(representatives.size(), [&](std::size_t i) {
    generated[i] = GenerateSampleWise(params, representatives[i], labels[i], config);
    generated[i].mode = PerturbationMode::kSpeakerWise;
  });
  std::map<int, Perturbation> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out.emplace(labels[i], std::move(generated[i]));
  }
  return out;
}

Perturbation UniformNoise(const AudioClip& clip, const SlemConfig& config,
                          std::uint64_t seed) {
  config.Validate();
  const AudioClip patch = CropFixedPatch(clip, config.patch_length);
  Perturbation p;
  p.mask = AmplitudeMask(patch.samples, config.mask_keep_fraction);
  p.delta.assign(patch.size(), 0.0);
  p.epsilon = config.epsilon;
  p.rate = clip.rate;
  Rng rng(seed);
  for (std::size_t t = 0; t < p.delta.size(); ++t) {
    const double v = rng.Uniform(-config.epsilon, config.epsilon);
    if (p.mask[t]) p.delta[t] = v;
  }
  simd::Active().clamp_mask(config.epsilon, p.mask.data(), p.delta.data(), p.delta.size());
  return p;
}

AudioClip Apply(const AudioClip& clip, const Perturbation& perturbation) {
  if (clip.rate != perturbation.rate) {
    throw Error(ErrorCode::kRateMismatch, "perturbation rate does not match the clip");
  }
  AudioClip out = clip;
  const std::size_t n = std::min(clip.size(), perturbation.delta.size());
  for (std::size_t t = 0; t < n; ++t) {
    out.samples[t] = std::clamp(clip.samples[t] + perturbation.delta[t], -1.0, 1.0);
  }
  return out;
}

}  // namespace voxshield
