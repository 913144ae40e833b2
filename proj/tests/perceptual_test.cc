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

#include <gtest/gtest.h>

#include <algorithm>
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
using testing::VoicedClip;

AudioClip AddNoise(const AudioClip& clean, double sigma, std::uint64_t seed) {
  Rng rng(seed);
  AudioClip out = clean;
  for (double& v : out.samples) v += sigma * rng.Normal();
  return out;
}

// Sine at the intelligibility analysis rate.
AudioClip Tone10k(std::size_t n, double hz, double amp = 0.5) {
  AudioClip clip{std::vector<double>(n), kStoiRate};
  for (std::size_t t = 0; t < n; ++t) {
    clip.samples[t] = amp * std::sin(2.0 * std::numbers::pi * hz * t / kStoiRate);
  }
  return clip;
}

TEST(StftLossTest, IdentityZeroReferenceAndNaiveOracle) {
  const AudioClip x = VoicedClip(1, 3000);
  EXPECT_EQ(StftLoss(x, x), 0.0);

  const AudioClip zero{std::vector<double>(3000, 0.0), 16000};
  const AudioClip y = VoicedClip(2, 3000);
  const std::vector<double> w = HannWindow(400);
  double energy = 0.0, diff_energy = 0.0;
  for (std::size_t start = 0; start + 400 <= 3000; start += 160) {
    std::vector<double> fy(400), fd(400);
    for (std::size_t t = 0; t < 400; ++t) {
      fy[t] = w[t] * y.samples[start + t];
      fd[t] = w[t] * (y.samples[start + t] - x.samples[start + t]);
    }
    for (const auto& c : oracle::NaiveDft(fy, 512)) energy += std::norm(c);
    for (const auto& c : oracle::NaiveDft(fd, 512)) diff_energy += std::norm(c);
  }
  EXPECT_LE(RelativeError(StftLoss(zero, y), std::sqrt(energy)), 1e-8);
  EXPECT_LE(RelativeError(StftLoss(x, y), std::sqrt(diff_energy)), 1e-8);

  EXPECT_THROW(StftLoss(x, VoicedClip(2, 2999)), Error);
  AudioClip other_rate = y;
  other_rate.rate = 8000;
  EXPECT_THROW(StftLoss(x, other_rate), Error);
}

TEST(StftLossTest, GradientMatchesFiniteDifferences) {
  const AudioClip x = VoicedClip(3, 2000);
  const AudioClip y = AddNoise(x, 0.01, 4);
  const StftDistance dist;
  std::vector<double> grad(y.size(), 0.0);
  dist.Evaluate(x.samples, y.samples, grad, 1.0);
  const auto f = [&](std::span<const double> d) { return dist.Evaluate(x.samples, d); };
  Rng rng(5);
  int good = 0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t i = rng.Below(y.size());
    good += RelativeError(grad[i], CentralDifference(f, y.samples, i, 1e-4)) <= 1e-3;
  }
  EXPECT_GE(good, 95);

  std::vector<double> zero_grad(x.size(), 0.0);
  EXPECT_EQ(dist.Evaluate(x.samples, x.samples, zero_grad), 0.0);
  for (double g : zero_grad) EXPECT_EQ(g, 0.0);
}

TEST(SilentFramesTest, NoRemovalReconstructsInterior) {
  AudioClip clean = Tone10k(4000, 440.0);
  AudioClip degraded = Tone10k(4000, 700.0, 0.3);
  const auto [c, d] = RemoveSilentFrames(clean, degraded);
  const std::size_t frames = FrameCount(4000, 256, 128);
  ASSERT_EQ(c.size(), (frames - 1) * 128 + 256);
  for (std::size_t t = 128; t + 128 < c.size(); ++t) {
    EXPECT_NEAR(c.samples[t], clean.samples[t], 1e-6);
    EXPECT_NEAR(d.samples[t], degraded.samples[t], 1e-6);
  }
}

TEST(SilentFramesTest, DigitalSilenceGapIsRemoved) {
  AudioClip clean = Tone10k(30000, 500.0);
  for (std::size_t t = 10000; t < 20000; ++t) clean.samples[t] = 0.0;
  const auto [c, d] = RemoveSilentFrames(clean, clean);
  EXPECT_LT(c.size(), clean.size() - 9000);
  // Every kept frame has energy, so no zero run spans a whole output frame.
  std::size_t run = 0, longest = 0;
  for (double v : c.samples) {
    run = v == 0.0 ? run + 1 : 0;
    longest = std::max(longest, run);
  }
  EXPECT_LT(longest, kStoiFrame);
  EXPECT_THROW(RemoveSilentFrames(AudioClip{std::vector<double>(3000, 0.0), kStoiRate},
                                  AudioClip{std::vector<double>(3000, 0.0), kStoiRate}),
               Error);
}

TEST(SilentFramesTest, KeepDecisionsMatchEnergyScan) {
  // Frames fade in and out so some sit just above and some below -40 dB.
  AudioClip clean{std::vector<double>(20000), kStoiRate};
  Rng rng(9);
  for (std::size_t t = 0; t < clean.size(); ++t) {
    const double env = std::pow(10.0, -3.0 * std::abs(std::sin(t / 3000.0)));
    clean.samples[t] = env * rng.Uniform(-0.5, 0.5);
  }
  const AudioClip degraded{UniformVector(10, clean.size(), -0.1, 0.1), kStoiRate};

  std::vector<double> w(256);
  for (std::size_t t = 0; t < 256; ++t) {
    w[t] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * t / 256.0);
  }
  std::vector<double> energy;
  for (std::size_t s = 0; s + 256 <= clean.size(); s += 128) {
    double e = 0.0;
    for (std::size_t t = 0; t < 256; ++t) e += std::pow(w[t] * clean.samples[s + t], 2);
    energy.push_back(10.0 * std::log10(e));
  }
  const double top = *std::max_element(energy.begin(), energy.end());
  std::vector<std::size_t> kept;
  for (std::size_t m = 0; m < energy.size(); ++m) {
    if (energy[m] > top - 40.0) kept.push_back(m);
  }
  ASSERT_LT(kept.size(), energy.size());
  ASSERT_GT(kept.size(), 30u);

  std::vector<double> expect_c((kept.size() - 1) * 128 + 256, 0.0), expect_d(expect_c);
  for (std::size_t k = 0; k < kept.size(); ++k) {
    for (std::size_t t = 0; t < 256; ++t) {
      expect_c[k * 128 + t] += w[t] * clean.samples[kept[k] * 128 + t];
      expect_d[k * 128 + t] += w[t] * degraded.samples[kept[k] * 128 + t];
    }
  }
  const auto [c, d] = RemoveSilentFrames(clean, degraded);
  ASSERT_EQ(c.size(), expect_c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_NEAR(c.samples[i], expect_c[i], 1e-12);
    EXPECT_NEAR(d.samples[i], expect_d[i], 1e-12);
  }
}

TEST(EnvelopeTest, ShapeZeroAndToneBand) {
  const EnvelopeMatrix zero = BandEnvelopes(AudioClip{std::vector<double>(3000, 0.0), kStoiRate});
  EXPECT_EQ(zero.bands, 15u);
  EXPECT_EQ(zero.frames, FrameCount(3000, 256, 128));
  EXPECT_EQ(zero.values.size(), 15u * zero.frames);
  for (double v : zero.values) EXPECT_EQ(v, 0.0);

  const EnvelopeMatrix env = BandEnvelopes(Tone10k(5000, 300.0));
  std::size_t best = 0;
  std::vector<double> mean(15, 0.0);
  for (std::size_t j = 0; j < 15; ++j) {
    for (std::size_t m = 0; m < env.frames; ++m) mean[j] += env.at(j, m);
    if (mean[j] > mean[best]) best = j;
  }
  EXPECT_EQ(best, 3u);
  EXPECT_THROW(BandEnvelopes(AudioClip{std::vector<double>(100, 0.1), kStoiRate}), Error);
  EXPECT_THROW(BandEnvelopes(AudioClip{std::vector<double>(3000, 0.1), 16000}), Error);
}

TEST(StoiTest, IdentityRangeAndScaleInvariance) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const AudioClip x = VoicedClip(100 + s, 16000);
    EXPECT_NEAR(StoiScore(x, x), 1.0, 1e-6);
    const AudioClip y = AddNoise(x, 0.05, s);
    const double score = StoiScore(x, y);
    EXPECT_GE(score, 0.0);
    EXPECT_LE(score, 1.0);
    AudioClip y2 = y;
    for (double& v : y2.samples) v *= 0.37;
    EXPECT_NEAR(StoiScore(x, y2), score, 1e-6);
  }
  EXPECT_THROW(StoiScore(AudioClip{std::vector<double>(16000, 0.0), 16000},
                         AudioClip{std::vector<double>(16000, 0.0), 16000}),
               Error);
}

TEST(StoiTest, AgreesWithReferenceConstruction) {
  for (std::uint64_t s = 0; s < 4; ++s) {
    const AudioClip x = VoicedClip(200 + s, 24000);
    const AudioClip y = AddNoise(x, 0.02 + 0.04 * s, 300 + s);
    EXPECT_NEAR(StoiScore(x, y), oracle::ReferenceStoi(x.samples, y.samples), 0.01) << s;
  }
}

TEST(StoiTest, MonotoneInNoiseLevel) {
  const AudioClip x = VoicedClip(7, 24000);
  double prev = 1.0 + 1e-9;
  for (double sigma : {0.005, 0.02, 0.05, 0.1, 0.3}) {
    const double score = StoiScore(x, AddNoise(x, sigma, 99));
    EXPECT_LE(score, prev) << sigma;
    prev = score;
  }
}

TEST(StoiLossTest, DefinitionAndNaiveEnvelopeTerm) {
  const AudioClip x = VoicedClip(8, 16000);
  EXPECT_NEAR(StoiLoss(x, x, 0.1), 0.0, 1e-12);
  const AudioClip y = AddNoise(x, 0.05, 10);
  const double d = StoiScore(x, y);
  EXPECT_NEAR(StoiLoss(x, y, 0.0), (1.0 - d) * (1.0 - d), 1e-12);

  // Envelope term by hand: resample, trim by clean energy, envelopes, mean
  // absolute difference.
  const AudioClip x10 = ResampleLinear(x, kStoiRate);
  const AudioClip y10 = ResampleLinear(y, kStoiRate);
  const auto [xt, yt] = RemoveSilentFrames(x10, y10);
  const EnvelopeMatrix ex = BandEnvelopes(xt);
  const EnvelopeMatrix ey = BandEnvelopes(yt);
  double l1 = 0.0;
  for (std::size_t m = 0; m < ex.frames; ++m) {
    double s = 0.0;
    for (std::size_t j = 0; j < 15; ++j) s += std::abs(ex.at(j, m) - ey.at(j, m));
    l1 += s / 15.0;
  }
  l1 /= static_cast<double>(ex.frames);
  EXPECT_NEAR(StoiLoss(x, y, 0.3), (1.0 - d) * (1.0 - d) + 0.3 * l1, 1e-10);
}

TEST(StoiLossTest, GradientMatchesFiniteDifferences) {
  const AudioClip x = VoicedClip(11, 8000);
  const AudioClip y = AddNoise(x, 0.03, 12);
  const StoiReference ref(x);
  std::vector<double> grad(y.size(), 0.0);
  ref.Evaluate(y.samples, 0.1, grad, 1.0);
  const auto f = [&](std::span<const double> d) { return ref.Evaluate(d, 0.1).loss; };
  Rng rng(13);
  int good = 0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t i = rng.Below(y.size());
    good += RelativeError(grad[i], CentralDifference(f, y.samples, i, 1e-4), 1e-7) <= 1e-3;
  }
  EXPECT_GE(good, 95);
}

TEST(StoiLossTest, RegimeTracksSignsAndClipping) {
  const AudioClip x = VoicedClip(14, 8000);
  const StoiReference ref(x);
  const std::vector<std::uint8_t> same = ref.Regime(x.samples);
  const EnvelopeMatrix env = BandEnvelopes(RemoveSilentFrames(ResampleLinear(x, kStoiRate),
                                                              ResampleLinear(x, kStoiRate))
                                               .first);
  ASSERT_GE(same.size(), env.values.size());
  // Equal envelopes: every difference is zero and nothing is clipped.
  for (std::size_t i = 0; i < env.values.size(); ++i) EXPECT_EQ(same[i], 1);
  for (std::size_t i = env.values.size(); i < same.size(); ++i) EXPECT_EQ(same[i], 1);

  AudioClip louder = x;
  for (double& v : louder.samples) v *= 2.0;
  const std::vector<std::uint8_t> up = ref.Regime(louder.samples);
  ASSERT_EQ(up.size(), same.size());
  for (std::size_t i = 0; i < env.values.size(); ++i) {
    if (env.values[i] > 0.0) EXPECT_EQ(up[i], 2);
  }
  // Away from regime switches the loss is smooth at a tight step.
  const AudioClip y = AddNoise(x, 0.03, 15);
  const std::vector<std::uint8_t> base = ref.Regime(y.samples);
  std::vector<double> grad(y.size(), 0.0);
  ref.Evaluate(y.samples, 0.1, grad, 1.0);
  const auto f = [&](std::span<const double> d) { return ref.Evaluate(d, 0.1).loss; };
  Rng rng(16);
  int smooth = 0, good = 0;
  for (int k = 0; k < 200 && smooth < 50; ++k) {
    const std::size_t i = rng.Below(y.size());
    std::vector<double> lo = y.samples, hi = y.samples;
    lo[i] -= 1e-4;
    hi[i] += 1e-4;
    if (ref.Regime(lo) != base || ref.Regime(hi) != base) continue;
    ++smooth;
    good += RelativeError(grad[i], CentralDifference(f, y.samples, i, 1e-4), 1e-7) <= 1e-3;
  }
  EXPECT_GT(smooth, 0);
  EXPECT_EQ(good, smooth);
}

TEST(SnrMseTest, WorkedValues) {
  const std::vector<double> ones(4, 1.0), tenth(4, 0.1), zeros(4, 0.0);
  EXPECT_NEAR(SnrDb(ones, tenth), 20.0, 1e-12);
  EXPECT_NEAR(SnrDb(ones, ones), 0.0, 1e-12);
  try {
    SnrDb(ones, zeros);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kZeroEnergy);
    EXPECT_NE(std::string(e.what()).find("zero noise energy"), std::string::npos);
  }
  EXPECT_THROW(SnrDb(zeros, ones), Error);

  EXPECT_EQ(ReportedMse(ones, ones), 0.0);
  const std::vector<double> c2(2, 0.0), p2(2, 0.003);
  EXPECT_NEAR(MeanSquaredError(c2, p2), 9e-6, 1e-18);
  EXPECT_NEAR(ReportedMse(c2, p2), 9.0, 1e-9);
  EXPECT_THROW(ReportedMse(c2, ones), Error);

  const AudioClip x = VoicedClip(14, 5000);
  std::vector<double> p = x.samples;
  const std::vector<double> delta = UniformVector(15, p.size(), -0.005, 0.005);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] += delta[i];
  EXPECT_LE(ReportedMse(x.samples, p), 25.0);
}

TEST(WeightsTest, RejectsNegative) {
  PhlWeights w;
  EXPECT_NO_THROW(w.Validate());
  w.gamma = -0.1;
  EXPECT_THROW(w.Validate(), Error);
}

}  // namespace
}  // namespace voxshield
