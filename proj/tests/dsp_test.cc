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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "reference_oracles.h"
#include "test_util.h"
#include "voxshield/error.h"
#include "voxshield/random.h"

namespace voxshield {
namespace {

using testing::CentralDifference;
using testing::RelativeError;
using testing::UniformVector;

TEST(WindowTest, HannValues) {
  const std::vector<double> w4 = HannWindow(4);
  ASSERT_EQ(w4.size(), 4u);
  EXPECT_NEAR(w4[0], 0.0, 1e-15);
  EXPECT_NEAR(w4[1], 0.75, 1e-15);
  EXPECT_NEAR(w4[2], 0.75, 1e-15);
  EXPECT_NEAR(w4[3], 0.0, 1e-15);
  const std::vector<double> w3 = HannWindow(3);
  EXPECT_NEAR(w3[1], 1.0, 1e-15);
  for (std::size_t len : {2u, 5u, 400u, 401u}) {
    const std::vector<double> w = HannWindow(len);
    for (std::size_t t = 0; t < len; ++t) EXPECT_EQ(w[t], w[len - 1 - t]);
  }
  EXPECT_THROW(HannWindow(1), Error);
}

TEST(WindowTest, PeriodicHannOverlapAddsToOne) {
  const std::vector<double> w = PeriodicHannWindow(256);
  for (std::size_t t = 0; t < 128; ++t) EXPECT_NEAR(w[t] + w[t + 128], 1.0, 1e-12);
}

TEST(StftTest, FrameCountAndZeroSignal) {
  EXPECT_EQ(FrameCount(512, 256, 128), 3u);
  EXPECT_EQ(FrameCount(255, 256, 128), 0u);
  EXPECT_EQ(FrameCount(32000, 400, 160), 198u);
  const AudioClip zero{std::vector<double>(512, 0.0), 16000};
  const Spectrogram s = Stft(zero, HannWindow(256), 128, 256);
  EXPECT_EQ(s.frames, 3u);
  EXPECT_EQ(s.bins, 129u);
  for (const auto& v : s.values) EXPECT_EQ(std::abs(v), 0.0);
  EXPECT_THROW(Stft(AudioClip{std::vector<double>(100, 0.1), 16000}, HannWindow(256), 128, 256),
               Error);
}

TEST(StftTest, MatchesNaiveDft) {
  const AudioClip clip{UniformVector(2, 1200, -1.0, 1.0), 16000};
  const std::vector<double> w = HannWindow(400);
  const Spectrogram s = Stft(clip, w, 160, 512);
  ASSERT_EQ(s.frames, FrameCount(1200, 400, 160));
  for (std::size_t m = 0; m < s.frames; ++m) {
    std::vector<double> frame(400);
    for (std::size_t t = 0; t < 400; ++t) frame[t] = w[t] * clip.samples[m * 160 + t];
    const auto ref = oracle::NaiveDft(frame, 512);
    for (std::size_t b = 0; b < s.bins; ++b) {
      EXPECT_NEAR(s.at(m, b).real(), ref[b].real(), 1e-9);
      EXPECT_NEAR(s.at(m, b).imag(), ref[b].imag(), 1e-9);
    }
  }
}

TEST(StftTest, SinePeaksAtExpectedBin) {
  AudioClip clip{std::vector<double>(4000), 16000};
  for (std::size_t t = 0; t < clip.size(); ++t) {
    clip.samples[t] = std::sin(2.0 * std::numbers::pi * 1000.0 * t / 16000.0);
  }
  const Spectrogram s = Stft(clip, HannWindow(400), 160, 512);
  for (std::size_t m = 0; m < s.frames; ++m) {
    std::size_t best = 0;
    for (std::size_t b = 1; b < s.bins; ++b) {
      if (std::abs(s.at(m, b)) > std::abs(s.at(m, best))) best = b;
    }
    EXPECT_EQ(best, 32u);
  }
  EXPECT_DOUBLE_EQ(s.BinFrequency(32), 1000.0);
}

TEST(StftTest, LinearityAndQuadraticEnergy) {
  const std::vector<double> x = UniformVector(3, 2000, -1.0, 1.0);
  const std::vector<double> y = UniformVector(4, 2000, -1.0, 1.0);
  const double a = 0.7, b = -1.3;
  std::vector<double> z(2000);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = a * x[i] + b * y[i];
  const StftPlan plan(HannWindow(400), 160, 512);
  const Spectrogram sx = plan.Forward(x, 16000);
  const Spectrogram sy = plan.Forward(y, 16000);
  const Spectrogram sz = plan.Forward(z, 16000);
  for (std::size_t i = 0; i < sz.values.size(); ++i) {
    EXPECT_LT(std::abs(sz.values[i] - (a * sx.values[i] + b * sy.values[i])), 1e-9);
  }
  std::vector<double> x3(x);
  for (double& v : x3) v *= 3.0;
  const Spectrogram s3 = plan.Forward(x3, 16000);
  for (std::size_t i = 0; i < s3.values.size(); ++i) {
    EXPECT_NEAR(std::norm(s3.values[i]), 9.0 * std::norm(sx.values[i]),
                1e-9 * (1.0 + std::norm(s3.values[i])));
  }
}

TEST(StftTest, AdjointMatchesFiniteDifferences) {
  const StftPlan plan(HannWindow(64), 32, 128);
  const std::size_t n = 300;
  const std::size_t frames = FrameCount(n, 64, 32);
  Rng rng(5);
  std::vector<std::complex<double>> proj(frames * plan.bins());
  for (auto& c : proj) c = {rng.Normal(), rng.Normal()};
  const auto f = [&](std::span<const double> x) {
    const Spectrogram s = plan.Forward(x, 16000);
    double v = 0.0;
    for (std::size_t i = 0; i < proj.size(); ++i) {
      v += proj[i].real() * s.values[i].real() + proj[i].imag() * s.values[i].imag();
    }
    return v;
  };
  const std::vector<double> x = UniformVector(6, n, -1.0, 1.0);
  std::vector<double> grad(n, 0.0);
  plan.Adjoint(proj, frames, grad);
  for (std::size_t i = 0; i < n; i += 7) {
    EXPECT_LT(RelativeError(grad[i], CentralDifference(f, x, i, 1e-4)), 1e-6) << i;
  }
}

TEST(MelTest, ScaleAndFilterShape) {
  EXPECT_NEAR(HzToMel(1000.0), 1000.0, 0.5);
  EXPECT_NEAR(MelToHz(HzToMel(3210.0)), 3210.0, 1e-9);
  const MelFilterbank fb = MakeMelFilterbank(512, 16000, 40, 20.0, 8000.0);
  ASSERT_EQ(fb.n_mels, 40u);
  ASSERT_EQ(fb.bins, 257u);
  const double mel_lo = HzToMel(20.0), mel_hi = HzToMel(8000.0);
  for (std::size_t f = 0; f < fb.n_mels; ++f) {
    std::size_t argmax = 0;
    bool rising = true;
    double prev = 0.0;
    for (std::size_t b = 0; b < fb.bins; ++b) {
      const double w = fb.at(f, b);
      EXPECT_GE(w, 0.0);
      if (w > fb.at(f, argmax)) argmax = b;
      if (!rising) EXPECT_LE(w, prev + 1e-15);  // unimodal
      if (w < prev) rising = false;
      prev = w;
    }
    // The maximum sits on one of the two bins bracketing the filter centre.
    const double centre = MelToHz(mel_lo + (mel_hi - mel_lo) * (f + 1.0) / 41.0);
    const double centre_bin = centre * 512.0 / 16000.0;
    EXPECT_LE(std::abs(static_cast<double>(argmax) - centre_bin), 1.0) << f;
  }
  EXPECT_THROW(MakeMelFilterbank(512, 16000, 40, 20.0, 9000.0), Error);
  EXPECT_THROW(MakeMelFilterbank(512, 16000, 40, 500.0, 400.0), Error);
  EXPECT_THROW(MakeMelFilterbank(512, 16000, 0, 20.0, 8000.0), Error);
}

TEST(LogMelTest, ShapeAndFloor) {
  const FeatureConfig cfg;
  const FeatureMap zero = LogMelFeatures(AudioClip{std::vector<double>(32000, 0.0), 16000}, cfg);
  EXPECT_EQ(zero.frames, 198u);
  EXPECT_EQ(zero.bins, 40u);
  for (double v : zero.values) EXPECT_EQ(v, std::log(1e-10));
  EXPECT_THROW(LogMelFeatures(AudioClip{std::vector<double>(32000, 0.0), 8000}, cfg), Error);
}

TEST(LogMelTest, MatchesNaivePipeline) {
  const AudioClip clip = testing::VoicedClip(12, 4000);
  const FeatureConfig cfg;
  const FeatureMap fm = LogMelFeatures(clip, cfg);
  const auto ref = oracle::NaiveLogMel(clip.samples, 16000, 40, 20.0, 8000.0, 1e-10);
  ASSERT_EQ(fm.frames, ref.size());
  for (std::size_t m = 0; m < fm.frames; ++m) {
    for (std::size_t f = 0; f < fm.bins; ++f) {
      EXPECT_LE(RelativeError(fm.at(m, f), ref[m][f], 1e-300), 1e-8) << m << "," << f;
    }
  }
}

TEST(LogMelTest, BackwardMatchesFiniteDifferences) {
  FeatureConfig cfg;
  const LogMelFrontEnd fe(cfg);
  const AudioClip clip = testing::VoicedClip(21, 1200);
  LogMelFrontEnd::Cache cache;
  const FeatureMap fm = fe.Forward(clip.samples, &cache);
  FeatureMap proj{fm.frames, fm.bins, UniformVector(8, fm.values.size(), -1.0, 1.0)};
  const auto f = [&](std::span<const double> x) {
    const FeatureMap out = fe.Forward(x);
    double v = 0.0;
    for (std::size_t i = 0; i < out.values.size(); ++i) v += proj.values[i] * out.values[i];
    return v;
  };
  std::vector<double> grad(clip.size(), 0.0);
  fe.Backward(cache, proj, grad);
  int good = 0, total = 0;
  for (std::size_t i = 3; i < clip.size(); i += 11, ++total) {
    good += RelativeError(grad[i], CentralDifference(f, clip.samples, i, 1e-4)) <= 1e-3;
  }
  EXPECT_GE(good, total * 95 / 100);
}

TEST(OctaveTest, CentresAndDisjointBands) {
  const OctaveBandMatrix obm = ThirdOctaveMatrix(512, 10000);
  ASSERT_EQ(obm.center_frequencies.size(), 15u);
  EXPECT_DOUBLE_EQ(obm.center_frequencies[0], 150.0);
  EXPECT_NEAR(obm.center_frequencies[3], 300.0, 1e-12);
  EXPECT_NEAR(obm.center_frequencies[14], 3809.7625, 1e-3);  // 150 * 2^(14/3)
  for (std::size_t b = 0; b < obm.bins; ++b) {
    double coverage = 0.0;
    for (std::size_t k = 0; k < 15; ++k) coverage += obm.weights[k * obm.bins + b];
    EXPECT_LE(coverage, 1.0);
  }
  for (std::size_t k = 0; k < 15; ++k) {
    EXPECT_LT(obm.support[k].first, obm.support[k].second);
    if (k > 0) EXPECT_LE(obm.support[k - 1].second, obm.support[k].first);
  }
  EXPECT_THROW(ThirdOctaveMatrix(512, 8000), Error);
  EXPECT_THROW(ThirdOctaveMatrix(64, 10000), Error);
}

TEST(ResampleTest, IdentityLengthAndSine) {
  const AudioClip clip{UniformVector(4, 1000, -1.0, 1.0), 16000};
  EXPECT_EQ(ResampleLinear(clip, 16000).samples, clip.samples);
  EXPECT_EQ(ResampleLinear(AudioClip{std::vector<double>(16000, 0.1), 16000}, 10000).size(),
            10000u);

  AudioClip sine{std::vector<double>(16000), 16000};
  for (std::size_t t = 0; t < sine.size(); ++t) {
    sine.samples[t] = std::sin(2.0 * std::numbers::pi * 100.0 * t / 16000.0);
  }
  const AudioClip out = ResampleLinear(sine, 10000);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t t = 0; t < out.size(); ++t) {
    const double ref = std::sin(2.0 * std::numbers::pi * 100.0 * t / 10000.0);
    sxy += ref * out.samples[t];
    sxx += ref * ref;
    syy += out.samples[t] * out.samples[t];
  }
  EXPECT_GE(sxy / std::sqrt(sxx * syy), 0.999);
  EXPECT_THROW(ResampleLinear(AudioClip{{}, 16000}, 10000), Error);
}

TEST(ResampleTest, MatchesOracleAndAdjoint) {
  const std::vector<double> x = UniformVector(14, 997, -1.0, 1.0);
  const LinearResampler r(x.size(), 16000, 10000);
  const std::vector<double> y = r.Forward(x);
  const std::vector<double> ref = oracle::LinearResample(x, 16000, 10000);
  ASSERT_EQ(y.size(), ref.size());
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], ref[i], 1e-12);

  // <A x, g> = <x, A^T g>
  const std::vector<double> g = UniformVector(15, y.size(), -1.0, 1.0);
  std::vector<double> at(x.size(), 0.0);
  r.Adjoint(g, at);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) lhs += y[i] * g[i];
  for (std::size_t i = 0; i < x.size(); ++i) rhs += x[i] * at[i];
  EXPECT_NEAR(lhs, rhs, 1e-10);
}

}  // namespace
}  // namespace voxshield
