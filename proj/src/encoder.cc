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

#include "voxshield/encoder.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>

#include "voxshield/error.h"
#include "voxshield/parallel.h"
#include "voxshield/random.h"
#include "voxshield/simd/kernels.h"

namespace voxshield {
namespace {

constexpr double kStdFloor = 1e-6;
constexpr std::uint32_t kModelVersion = 1;
constexpr char kModelMagic[4] = {'H', 'S', 'P', 'K'};

double ToFloatGrid(double v) { return static_cast<double>(static_cast<float>(v)); }

void RoundToFloatGrid(EncoderParams& params) {
  for (auto tensor : params.Tensors()) {
    for (double& v : tensor) v = ToFloatGrid(v);
  }
}

void NormalizeRows(std::vector<double>& matrix, std::size_t cols) {
  for (std::size_t r = 0; r * cols < matrix.size(); ++r) {
    double* row = &matrix[r * cols];
    double norm = 0.0;
    for (std::size_t c = 0; c < cols; ++c) norm += row[c] * row[c];
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (std::size_t c = 0; c < cols; ++c) row[c] /= norm;
    }
  }
}

int TapOffset(const ConvLayer& layer, std::uint32_t k) {
  const int half = static_cast<int>(layer.kernel - 1) / 2;
  return (static_cast<int>(k) - half) * static_cast<int>(layer.dilation);
}

// out[t][o] = relu(b[o] + sum_k W[o][k] . in[t + offset(k)]), zero padded.
void ConvForward(const ConvLayer& layer, const double* in, std::size_t frames,
                 double* out) {
  const auto& kernels = simd::Active();
  const std::size_t cin = layer.in_channels;
  const std::size_t cout = layer.out_channels;
  const auto T = static_cast<long>(frames);
  for (long t = 0; t < T; ++t) {
    for (std::size_t o = 0; o < cout; ++o) {
      double acc = layer.bias[o];
      for (std::uint32_t k = 0; k < layer.kernel; ++k) {
        const long s = t + TapOffset(layer, k);
        if (s < 0 || s >= T) continue;
        acc += kernels.dot(&layer.weight[(o * layer.kernel + k) * cin],
                           in + s * cin, cin);
      }
      out[t * cout + o] = acc;
    }
  }
  kernels.relu(out, out, frames * cout);
}

// grad_out is taken w.r.t. the rectified output; act is that output.
void ConvBackward(const ConvLayer& layer, const double* in, const double* act,
                  const double* grad_out, std::size_t frames,
                  ConvLayer* grad_layer, double* grad_in) {
  const auto& kernels = simd::Active();
  const std::size_t cin = layer.in_channels;
  const std::size_t cout = layer.out_channels;
  const auto T = static_cast<long>(frames);
  for (long t = 0; t < T; ++t) {
    for (std::size_t o = 0; o < cout; ++o) {
      if (!(act[t * cout + o] > 0.0)) continue;
      const double g = grad_out[t * cout + o];
      if (g == 0.0) continue;
      if (grad_layer != nullptr) grad_layer->bias[o] += g;
      for (std::uint32_t k = 0; k < layer.kernel; ++k) {
        const long s = t + TapOffset(layer, k);
        if (s < 0 || s >= T) continue;
        const std::size_t w = (o * layer.kernel + k) * cin;
        if (grad_in != nullptr) {
          kernels.axpy(g, &layer.weight[w], grad_in + s * cin, cin);
        }
        if (grad_layer != nullptr) {
          kernels.axpy(g, in + s * cin, &grad_layer->weight[w], cin);
        }
      }
    }
  }
}

void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t GetU32(std::string_view bytes, std::size_t& pos) {
  if (pos + 4 > bytes.size()) {
    throw Error(ErrorCode::kBadModelFile, "model file truncated");
  }
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[pos + i]))
         << (8 * i);
  }
  pos += 4;
  return v;
}

EncoderParams ShapedParams(const EncoderConfig& config) {
  EncoderParams p;
  p.config = config;
  std::uint32_t in = config.n_mels;
  for (std::size_t l = 0; l < p.conv.size(); ++l) {
    ConvLayer& layer = p.conv[l];
    layer.in_channels = in;
    layer.out_channels = config.channels;
    layer.kernel = kConvStack[l].kernel;
    layer.dilation = kConvStack[l].dilation;
    layer.weight.assign(std::size_t{layer.out_channels} * layer.kernel * in, 0.0);
    layer.bias.assign(layer.out_channels, 0.0);
    in = config.channels;
  }
  p.projection.assign(std::size_t{config.embedding_dim} * 2 * config.channels, 0.0);
  p.aam_head.assign(std::size_t{config.num_speakers} * config.embedding_dim, 0.0);
  return p;
}

}  // namespace

void EncoderConfig::Validate() const {
  if (n_mels < 1 || channels < 1 || embedding_dim < 1) {
    throw Error(ErrorCode::kInvalidArgument,
                "n_mels, channels and embedding_dim must be >= 1");
  }
}

FeatureConfig EncoderConfig::Features() const {
  FeatureConfig f;
  f.n_mels = n_mels;
  return f;
}

EncoderConfig NamedEncoderConfig(std::string_view name) {
  EncoderConfig c;
  if (name == "cfgA") {
    c.n_mels = 40, c.channels = 64, c.embedding_dim = 64;
  } else if (name == "cfgB") {
    c.n_mels = 48, c.channels = 96, c.embedding_dim = 128;
  } else if (name == "cfgC") {
    c.n_mels = 40, c.channels = 96, c.embedding_dim = 64;
  } else if (name == "cfgD") {
    c.n_mels = 48, c.channels = 64, c.embedding_dim = 128;
  } else {
    throw Error(ErrorCode::kInvalidArgument,
                "unknown encoder config '" + std::string(name) +
                    "' (expected cfgA, cfgB, cfgC or cfgD)");
  }
  return c;
}

std::vector<std::span<double>> EncoderParams::Tensors() {
  std::vector<std::span<double>> out;
  for (auto& layer : conv) {
    out.emplace_back(layer.weight);
    out.emplace_back(layer.bias);
  }
  out.emplace_back(projection);
  out.emplace_back(aam_head);
  return out;
}

std::vector<std::span<const double>> EncoderParams::Tensors() const {
  std::vector<std::span<const double>> out;
  for (const auto& layer : conv) {
    out.emplace_back(layer.weight);
    out.emplace_back(layer.bias);
  }
  out.emplace_back(projection);
  out.emplace_back(aam_head);
  return out;
}

std::size_t EncoderParams::ParameterCount() const {
  std::size_t n = 0;
  for (auto t : Tensors()) n += t.size();
  return n;
}

EncoderParams EncoderParams::ZerosLike() const {
  EncoderParams z = ShapedParams(config);
  z.trained_epochs = 0;
  return z;
}

EncoderParams InitParams(const EncoderConfig& config) {
  config.Validate();
  EncoderParams p = ShapedParams(config);
  Rng rng(config.seed);
  for (auto& layer : p.conv) {
    const double bound =
        1.0 / std::sqrt(static_cast<double>(layer.in_channels * layer.kernel));
    for (double& w : layer.weight) w = rng.Uniform(-bound, bound);
  }
  const double proj_bound = 1.0 / std::sqrt(2.0 * config.channels);
  for (double& w : p.projection) w = rng.Uniform(-proj_bound, proj_bound);
  for (double& w : p.aam_head) w = rng.Normal();
  NormalizeRows(p.aam_head, config.embedding_dim);
  RoundToFloatGrid(p);
  return p;
}

Embedding Forward(const EncoderParams& params, const FeatureMap& features,
                  ForwardCache* cache) {
  const EncoderConfig& cfg = params.config;
  if (features.bins != cfg.n_mels) {
    throw Error(ErrorCode::kInvalidArgument,
                "feature bins " + std::to_string(features.bins) +
                    " do not match encoder n_mels " + std::to_string(cfg.n_mels));
  }
  if (features.frames < kMinFrames) {
    throw Error(ErrorCode::kInvalidArgument, "too few frames for the encoder");
  }
  const std::size_t T = features.frames;
  const std::size_t C = cfg.channels;

  ForwardCache local;
  ForwardCache& c = cache != nullptr ? *cache : local;
  c.input = features;
  const double* in = c.input.values.data();
  for (std::size_t l = 0; l < params.conv.size(); ++l) {
    c.activations[l].assign(T * C, 0.0);
    ConvForward(params.conv[l], in, T, c.activations[l].data());
    in = c.activations[l].data();
  }

  const std::vector<double>& h = c.activations.back();
  c.mean.assign(C, 0.0);
  c.stddev.assign(C, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t ch = 0; ch < C; ++ch) c.mean[ch] += h[t * C + ch];
  }
  for (double& m : c.mean) m /= static_cast<double>(T);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t ch = 0; ch < C; ++ch) {
      const double d = h[t * C + ch] - c.mean[ch];
      c.stddev[ch] += d * d;
    }
  }
  for (double& s : c.stddev) s = std::sqrt(s / static_cast<double>(T) + kStdFloor);

  c.pooled.resize(2 * C);
  std::copy(c.mean.begin(), c.mean.end(), c.pooled.begin());
  std::copy(c.stddev.begin(), c.stddev.end(), c.pooled.begin() + C);

  const std::size_t E = cfg.embedding_dim;
  const auto& kernels = simd::Active();
  c.projected.resize(E);
  double norm = 0.0;
  for (std::size_t e = 0; e < E; ++e) {
    c.projected[e] = kernels.dot(&params.projection[e * 2 * C], c.pooled.data(), 2 * C);
    norm += c.projected[e] * c.projected[e];
  }
  c.norm = std::sqrt(norm);
  if (!(c.norm > 0.0)) {
    throw Error(ErrorCode::kDiverged, "zero embedding before normalization");
  }
  Embedding out;
  out.values.resize(E);
  for (std::size_t e = 0; e < E; ++e) out.values[e] = c.projected[e] / c.norm;
  return out;
}

void Backward(const EncoderParams& params, const ForwardCache& cache,
              std::span<const double> grad_embedding, EncoderParams* param_grad,
              FeatureMap* input_grad) {
  const EncoderConfig& cfg = params.config;
  const std::size_t T = cache.input.frames;
  const std::size_t C = cfg.channels;
  const std::size_t E = cfg.embedding_dim;
  const auto& kernels = simd::Active();

  // e = z / |z|  =>  dz = (de - e <e, de>) / |z|
  double e_dot = 0.0;
  for (std::size_t e = 0; e < E; ++e) {
    e_dot += cache.projected[e] / cache.norm * grad_embedding[e];
  }
  std::vector<double> grad_z(E);
  for (std::size_t e = 0; e < E; ++e) {
    grad_z[e] = (grad_embedding[e] - cache.projected[e] / cache.norm * e_dot) / cache.norm;
  }

  std::vector<double> grad_pooled(2 * C, 0.0);
  for (std::size_t e = 0; e < E; ++e) {
    kernels.axpy(grad_z[e], &params.projection[e * 2 * C], grad_pooled.data(), 2 * C);
    if (param_grad != nullptr) {
      kernels.axpy(grad_z[e], cache.pooled.data(), &param_grad->projection[e * 2 * C], 2 * C);
    }
  }

  const std::vector<double>& h = cache.activations.back();
  std::vector<double> grad_h(T * C);
  const double inv_t = 1.0 / static_cast<double>(T);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t ch = 0; ch < C; ++ch) {
      grad_h[t * C + ch] =
          grad_pooled[ch] * inv_t + grad_pooled[C + ch] * (h[t * C + ch] - cache.mean[ch]) *
                                        inv_t / cache.stddev[ch];
    }
  }

  std::vector<double> grad_in;
  for (std::size_t l = params.conv.size(); l-- > 0;) {
    const ConvLayer& layer = params.conv[l];
    const double* in = l == 0 ? cache.input.values.data() : cache.activations[l - 1].data();
    double* grad_in_ptr = nullptr;
    if (l > 0) {
      grad_in.assign(T * layer.in_channels, 0.0);
      grad_in_ptr = grad_in.data();
    } else if (input_grad != nullptr) {
      grad_in_ptr = input_grad->values.data();
    }
    ConvBackward(layer, in, cache.activations[l].data(), grad_h.data(), T,
                 param_grad != nullptr ? &param_grad->conv[l] : nullptr, grad_in_ptr);
    if (l > 0) grad_h.swap(grad_in);
  }
}

double AamLoss(const EncoderParams& params, const Embedding& embedding, int label,
               double margin, double scale, std::span<double> grad_embedding,
               std::span<double> grad_head) {
  const std::size_t S = params.config.num_speakers;
  const std::size_t E = params.config.embedding_dim;
  if (label < 0 || static_cast<std::size_t>(label) >= S) {
    throw Error(ErrorCode::kInvalidArgument,
                "label " + std::to_string(label) + " out of range for " +
                    std::to_string(S) + " speakers");
  }
  if (!(margin >= 0.0 && margin < std::numbers::pi / 2) || !(scale > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid AAM margin or scale");
  }
  if (embedding.values.size() != E) {
    throw Error(ErrorCode::kInvalidArgument, "embedding dimension mismatch");
  }
  const auto& kernels = simd::Active();
  const auto y = static_cast<std::size_t>(label);
  std::vector<double> cosines(S), logits(S);
  for (std::size_t c = 0; c < S; ++c) {
    cosines[c] = kernels.dot(&params.aam_head[c * E], embedding.values.data(), E);
    logits[c] = scale * cosines[c];
  }
  const double cos_y = cosines[y];
  const double sin_y = std::sqrt(std::max(1.0 - cos_y * cos_y, 1e-12));
  const double cos_m = std::cos(margin), sin_m = std::sin(margin);
  logits[y] = scale * (cos_y * cos_m - sin_y * sin_m);

  const double max_logit = *std::max_element(logits.begin(), logits.end());
  double others = 0.0;
  for (std::size_t c = 0; c < S; ++c) {
    if (c != y) others += std::exp(logits[c] - max_logit);
  }
  const double target = std::exp(logits[y] - max_logit);
  const double denom = target + others;
  // log1p keeps precision when the target logit dominates.
  const double loss = logits[y] == max_logit ? std::log1p(others)
                                             : std::log(denom) + max_logit - logits[y];

  if (grad_embedding.empty() && grad_head.empty()) return loss;
  for (std::size_t c = 0; c < S; ++c) {
    const double p = std::exp(logits[c] - max_logit) / denom;
    const double d_logit = p - (c == y ? 1.0 : 0.0);
    // d logit / d cos
    const double slope = c == y ? scale * (cos_m + cos_y * sin_m / sin_y) : scale;
    const double d_cos = d_logit * slope;
    if (!grad_embedding.empty()) {
      kernels.axpy(d_cos, &params.aam_head[c * E], grad_embedding.data(), E);
    }
    if (!grad_head.empty()) {
      kernels.axpy(d_cos, embedding.values.data(), &grad_head[c * E], E);
    }
  }
  return loss;
}

TrainStepResult TrainStep(const EncoderParams& params,
                          std::span<const LabeledFeatures> batch,
                          double learning_rate, double margin, double scale) {
  if (batch.empty()) throw Error(ErrorCode::kInvalidArgument, "empty batch");
  std::vector<EncoderParams> grads(batch.size());
  std::vector<double> losses(batch.size());
  ParallelFor(batch.size(), [&](std::size_t i) {
    ForwardCache cache;
    const Embedding emb = Forward(params, *batch[i].features, &cache);
    grads[i] = params.ZerosLike();
    std::vector<double> grad_emb(emb.values.size(), 0.0);
    losses[i] = AamLoss(params, emb, batch[i].label, margin, scale, grad_emb,
                        grads[i].aam_head);
    Backward(params, cache, grad_emb, &grads[i], nullptr);
  });

  double mean_loss = 0.0;
  for (double l : losses) mean_loss += l;
  mean_loss /= static_cast<double>(batch.size());
  if (!std::isfinite(mean_loss)) {
    throw Error(ErrorCode::kDiverged, "training diverged (non-finite loss)");
  }

  TrainStepResult result{params, mean_loss};
  auto targets = result.params.Tensors();
  const double step = learning_rate / static_cast<double>(batch.size());
  for (const auto& g : grads) {
    const auto sources = g.Tensors();
    for (std::size_t t = 0; t < targets.size(); ++t) {
      simd::Axpy(-step, sources[t], targets[t]);
    }
  }
  NormalizeRows(result.params.aam_head, params.config.embedding_dim);
  RoundToFloatGrid(result.params);
  return result;
}

TrainResult TrainEncoder(const DatasetManifest& manifest, EncoderConfig config,
                         std::size_t epochs, const TrainOptions& options) {
  if (manifest.entries.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "cannot train on an empty manifest");
  }
  config.num_speakers = static_cast<std::uint32_t>(manifest.num_speakers);
  TrainResult result{InitParams(config), {}};
  if (epochs == 0) return result;

  const LogMelFrontEnd front_end(config.Features());
  std::vector<FeatureMap> features(manifest.entries.size());
  ParallelFor(features.size(), [&](std::size_t i) {
    const AudioClip clip = ReadWav(manifest.Resolve(manifest.entries[i]));
    if (clip.rate != kPipelineRate) {
      throw Error(ErrorCode::kRateMismatch,
                  manifest.entries[i].path + ": expected 16 kHz audio");
    }
    features[i] = front_end.Forward(CropFixedPatch(clip, options.patch_length).samples);
  });

  std::vector<std::size_t> order(features.size());
  const std::size_t batch_size = std::max<std::size_t>(1, options.batch_size);
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng(DeriveSeed(config.seed, 1000 + epoch));
    rng.Shuffle(order.begin(), order.end());
    double loss_sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      std::vector<LabeledFeatures> batch;
      for (std::size_t k = start; k < end; ++k) {
        batch.push_back({&features[order[k]], manifest.entries[order[k]].speaker});
      }
      TrainStepResult step = TrainStep(result.params, batch, options.learning_rate,
                                        options.margin, options.scale);
      result.params = std::move(step.params);
      loss_sum += step.mean_loss;
      ++steps;
    }
    result.epoch_losses.push_back(loss_sum / static_cast<double>(steps));
    ++result.params.trained_epochs;
  }
  return result;
}

Embedding EmbedClip(const EncoderParams& params, const LogMelFrontEnd& front_end,
                    const AudioClip& clip, std::size_t patch_length) {
  if (clip.rate != front_end.config().rate) {
    throw Error(ErrorCode::kRateMismatch, "clip rate does not match the front-end");
  }
  return Forward(params, front_end.Forward(CropFixedPatch(clip, patch_length).samples));
}

std::string SerializeModel(const EncoderParams& params) {
  std::string out(kModelMagic, 4);
  PutU32(out, kModelVersion);
  const EncoderConfig& c = params.config;
  PutU32(out, c.n_mels);
  PutU32(out, c.channels);
  PutU32(out, c.embedding_dim);
  PutU32(out, c.num_speakers);
  PutU32(out, static_cast<std::uint32_t>(c.seed & 0xFFFFFFFFu));
  PutU32(out, static_cast<std::uint32_t>(c.seed >> 32));
  PutU32(out, params.trained_epochs);
  for (auto tensor : params.Tensors()) {
    for (double v : tensor) PutU32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

EncoderParams DeserializeModel(std::string_view bytes) {
  if (bytes.size() < 4 || bytes.substr(0, 4) != std::string_view(kModelMagic, 4)) {
    throw Error(ErrorCode::kBadModelFile, "not a model file (bad magic)");
  }
  std::size_t pos = 4;
  const std::uint32_t version = GetU32(bytes, pos);
  if (version != kModelVersion) {
    throw Error(ErrorCode::kBadModelFile,
                "unsupported model version " + std::to_string(version));
  }
  EncoderConfig c;
  c.n_mels = GetU32(bytes, pos);
  c.channels = GetU32(bytes, pos);
  c.embedding_dim = GetU32(bytes, pos);
  c.num_speakers = GetU32(bytes, pos);
  const std::uint64_t lo = GetU32(bytes, pos);
  const std::uint64_t hi = GetU32(bytes, pos);
  c.seed = lo | (hi << 32);
  c.Validate();
  EncoderParams p = ShapedParams(c);
  p.trained_epochs = GetU32(bytes, pos);
  for (auto tensor : p.Tensors()) {
    for (double& v : tensor) {
      v = static_cast<double>(std::bit_cast<float>(GetU32(bytes, pos)));
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kBadModelFile, "non-finite parameter in model file");
      }
    }
  }
  if (pos != bytes.size()) {
    throw Error(ErrorCode::kBadModelFile, "trailing bytes in model file");
  }
  return p;
}

void SaveModel(const std::filesystem::path& path, const EncoderParams& params) {
  const std::string bytes = SerializeModel(params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoFailure, "write failed: " + path.string());
}

EncoderParams LoadModel(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  return DeserializeModel(bytes);
}

}  // namespace voxshield
