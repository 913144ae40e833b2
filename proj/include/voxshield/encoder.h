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

#ifndef VOXSHIELD_ENCODER_H_
#define VOXSHIELD_ENCODER_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "voxshield/audio_io.h"
#include "voxshield/dsp.h"

namespace voxshield {

// Compact TDNN speaker encoder: three dilated temporal convolutions with
// rectification (k5/d1, k3/d2, k3/d3), mean+std statistics pooling, a linear
// projection to the embedding, and an additive angular margin head.
struct EncoderConfig {
  std::uint32_t n_mels = 40;
  std::uint32_t channels = 64;
  std::uint32_t embedding_dim = 64;
  std::uint32_t num_speakers = 0;
  std::uint64_t seed = 0;

  void Validate() const;
  FeatureConfig Features() const;
};

// cfgA..cfgD: the generator config and the alternative architectures used
// for transfer experiments. Throws kInvalidArgument for other names.
EncoderConfig NamedEncoderConfig(std::string_view name);

struct ConvSpec {
  std::uint32_t kernel;
  std::uint32_t dilation;
};
inline constexpr std::array<ConvSpec, 3> kConvStack = {
    ConvSpec{5, 1}, ConvSpec{3, 2}, ConvSpec{3, 3}};
inline constexpr std::size_t kMinFrames = 9;

struct ConvLayer {
  std::uint32_t in_channels = 0;
  std::uint32_t out_channels = 0;
  std::uint32_t kernel = 0;
  std::uint32_t dilation = 0;
  std::vector<double> weight;  // out x kernel x in
  std::vector<double> bias;    // out
};

// Parameter values always lie on the float32 grid, so the model file
// round-trips exactly.
struct EncoderParams {
  EncoderConfig config;
  std::array<ConvLayer, 3> conv;
  std::vector<double> projection;  // embedding_dim x (2 * channels)
  std::vector<double> aam_head;    // num_speakers x embedding_dim, unit rows
  std::uint32_t trained_epochs = 0;

  // Tensors in the declared (serialization) order.
  std::vector<std::span<double>> Tensors();
  std::vector<std::span<const double>> Tensors() const;
  std::size_t ParameterCount() const;

  // Same shapes, all zeros.
  EncoderParams ZerosLike() const;
};

struct Embedding {
  std::vector<double> values;  // unit l2 norm
};

EncoderParams InitParams(const EncoderConfig& config);

struct ForwardCache {
  FeatureMap input;
  std::array<std::vector<double>, 3> activations;  // frames x channels
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<double> pooled;     // mean ++ stddev
  std::vector<double> projected;  // before normalization
  double norm = 0.0;
};

Embedding Forward(const EncoderParams& params, const FeatureMap& features,
                  ForwardCache* cache = nullptr);

// Reverse pass from dL/d(embedding). Either output may be null; non-null
// outputs are accumulated into (param_grad must come from ZerosLike, and
// input_grad must have the input shape).
void Backward(const EncoderParams& params, const ForwardCache& cache,
              std::span<const double> grad_embedding,
              EncoderParams* param_grad, FeatureMap* input_grad);

// Additive angular margin softmax: target logit scale * cos(theta_y + m),
// others scale * cos(theta_c); returns -log softmax at the target.
// Gradients are accumulated into the non-null outputs.
double AamLoss(const EncoderParams& params, const Embedding& embedding,
               int label, double margin, double scale,
               std::span<double> grad_embedding = {},
               std::span<double> grad_head = {});

struct TrainOptions {
  double learning_rate = 0.005;
  double margin = 0.2;
  double scale = 30.0;
  std::size_t batch_size = 32;
  std::size_t patch_length = kDefaultPatchLength;
};

struct LabeledFeatures {
  const FeatureMap* features;
  int label;
};

struct TrainStepResult {
  EncoderParams params;
  double mean_loss = 0.0;  // before the update
};

// One gradient-descent step on the mean AAM loss of the batch; head rows are
// renormalized afterwards. Throws kDiverged on a non-finite loss.
TrainStepResult TrainStep(const EncoderParams& params,
                          std::span<const LabeledFeatures> batch,
                          double learning_rate, double margin, double scale);

struct TrainResult {
  EncoderParams params;
  std::vector<double> epoch_losses;
};

// Mini-batch training on fixed-patch log-mel features of every manifest
// entry. Shuffling derives from config.seed; config.num_speakers is taken
// from the manifest.
TrainResult TrainEncoder(const DatasetManifest& manifest, EncoderConfig config,
                         std::size_t epochs, const TrainOptions& options);

// Fixed patch -> log-mel -> forward.
Embedding EmbedClip(const EncoderParams& params, const LogMelFrontEnd& front_end,
                    const AudioClip& clip, std::size_t patch_length);

// Model file: "HSPK", u32 version, u32 config fields, float32 tensors, all
// little-endian.
void SaveModel(const std::filesystem::path& path, const EncoderParams& params);
EncoderParams LoadModel(const std::filesystem::path& path);
std::string SerializeModel(const EncoderParams& params);
EncoderParams DeserializeModel(std::string_view bytes);

}  // namespace voxshield

#endif  // VOXSHIELD_ENCODER_H_
