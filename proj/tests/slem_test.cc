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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "test_util.h"
#include "voxshield/error.h"
#include "voxshield/random.h"

namespace voxshield {
namespace {

using testing::RelativeError;
using testing::VoicedClip;

constexpr std::size_t kPatch = 8000;

EncoderParams SmallEncoder(std::uint64_t seed = 3) {
  EncoderConfig c;
  c.channels = 8;
  c.embedding_dim = 8;
  c.num_speakers = 4;
  c.seed = seed;
  return InitParams(c);
}

SlemConfig FastConfig() {
  SlemConfig c;
  c.steps = 5;
  c.patch_length = kPatch;
  return c;
}

TEST(MaskTest, WorkedExamples) {
  const std::vector<double> x = {0.1, -0.5, 0.3, 0.0};
  EXPECT_EQ(AmplitudeMask(x, 0.5), (std::vector<std::uint8_t>{0, 1, 1, 0}));
  EXPECT_EQ(AmplitudeMask(x, 0.0), (std::vector<std::uint8_t>{0, 0, 0, 0}));
  EXPECT_EQ(AmplitudeMask(x, 1.0), (std::vector<std::uint8_t>{1, 1, 1, 1}));
  // ceil(0.3 * 4) = 2 kept.
  EXPECT_EQ(AmplitudeMask(x, 0.3), (std::vector<std::uint8_t>{0, 1, 1, 0}));
  // Ties go to the lower index.
  EXPECT_EQ(AmplitudeMask(std::vector<double>{0.2, -0.2, 0.2}, 0.5),
            (std::vector<std::uint8_t>{1, 1, 0}));
  EXPECT_THROW(AmplitudeMask(x, 1.5), Error);
}

TEST(MaskTest, KeepsLargestMagnitudes) {
  const std::vector<double> x = testing::UniformVector(5, 1001, -1.0, 1.0);
  for (double q : {0.1, 0.5, 0.77}) {
    const auto mask = AmplitudeMask(x, q);
    const std::size_t kept = std::count(mask.begin(), mask.end(), 1);
    EXPECT_EQ(kept, static_cast<std::size_t>(std::ceil(q * x.size() - 1e-9)));
    double min_kept = 2.0, max_dropped = -1.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      (mask[i] ? min_kept : max_dropped) =
          mask[i] ? std::min(min_kept, std::abs(x[i])) : std::max(max_dropped, std::abs(x[i]));
    }
    EXPECT_GE(min_kept, max_dropped);
  }
}

TEST(ProjectTest, MatchesScalarLoop) {
  const std::vector<double> delta = testing::UniformVector(6, 517, -0.02, 0.02);
  const auto mask = AmplitudeMask(testing::UniformVector(7, 517, -1.0, 1.0), 0.5);
  const std::vector<double> out = Project(delta, 0.005, mask);
  for (std::size_t i = 0; i < delta.size(); ++i) {
    const double expect = mask[i] ? std::clamp(delta[i], -0.005, 0.005) : 0.0;
    EXPECT_EQ(out[i], expect);
  }
  EXPECT_EQ(Project(std::vector<double>{0.3, -0.3, 0.001}, 0.01,
                    std::vector<std::uint8_t>{1, 1, 0}),
            (std::vector<double>{0.01, -0.01, 0.0}));
}

class ObjectiveTest : public ::testing::Test {
 protected:
  EncoderParams params_ = SmallEncoder();
};

// Fraction of 100 random coordinates whose analytic derivative agrees with a
// central difference.
double AgreementRate(const std::function<double(std::span<const double>)>& f,
                     std::span<const double> grad, const std::vector<double>& delta,
                     std::uint64_t seed) {
  Rng rng(seed);
  int good = 0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t i = rng.Below(delta.size());
    const double fd = testing::CentralDifference(f, delta, i, 1e-6);
    good += RelativeError(grad[i], fd, 1e-6) <= 1e-3;
  }
  return good / 100.0;
}

TEST_F(ObjectiveTest, ComponentGradientsMatchFiniteDifferences) {
  const AudioClip clip = CropFixedPatch(VoicedClip(40, kPatch), kPatch);
  const ProtectionObjective obj(params_, clip, 1, PhlWeights{}, 0.2, 30.0);
  const std::vector<double> delta = testing::UniformVector(41, kPatch, -0.005, 0.005);
  const auto component = [&](const char* name) {
    return [&, name](std::span<const double> d) {
      const LossBreakdown b = obj.Evaluate(d);
      return std::string(name) == "arc" ? b.arc : std::string(name) == "stft" ? b.stft : b.stoi;
    };
  };
  for (const char* name : {"arc", "stft", "stoi"}) {
    SCOPED_TRACE(name);
    EXPECT_GE(AgreementRate(component(name), obj.ComponentGradient(delta, name), delta, 42),
              0.95);
  }
  EXPECT_THROW(obj.ComponentGradient(delta, "mse"), Error);
}

TEST_F(ObjectiveTest, TotalGradientMatchesFiniteDifferences) {
  for (std::uint64_t s = 0; s < 3; ++s) {
    const AudioClip clip = CropFixedPatch(VoicedClip(50 + s, kPatch), kPatch);
    const PhlWeights w{1.0, 0.005, 0.01, 0.1};
    const std::vector<double> delta = testing::UniformVector(60 + s, kPatch, -0.005, 0.005);
    const auto f = [&](std::span<const double> d) {
      return TotalLoss(params_, clip, d, 2, w).total;
    };
    EXPECT_GE(AgreementRate(f, LossGradWrtDelta(params_, clip, delta, 2, w), delta, 70 + s),
              0.95);
  }
}

TEST_F(ObjectiveTest, BreakdownRecombinesAndArcOnlyWeights) {
  const AudioClip clip = CropFixedPatch(VoicedClip(80, kPatch), kPatch);
  const std::vector<double> delta = testing::UniformVector(81, kPatch, -0.005, 0.005);
  const PhlWeights w{0.7, 0.02, 0.3, 0.25};
  const LossBreakdown b = TotalLoss(params_, clip, delta, 0, w);
  EXPECT_NEAR(b.total, 0.7 * b.arc + 0.02 * b.stft + 0.3 * b.stoi, 1e-12);
  EXPECT_GT(b.stft, 0.0);
  EXPECT_GE(b.stoi, 0.0);

  const ProtectionObjective arc_only(params_, clip, 0, PhlWeights{1.0, 0.0, 0.0, 0.1}, 0.2,
                                     30.0);
  const std::vector<double> g = arc_only.Gradient(delta);
  const std::vector<double> arc = arc_only.ComponentGradient(delta, "arc");
  for (std::size_t i = 0; i < g.size(); ++i) ASSERT_EQ(g[i], arc[i]);
  EXPECT_NEAR(arc_only.Evaluate(delta).total, b.arc, 1e-12);
}

TEST_F(ObjectiveTest, RejectsBadInputs) {
  AudioClip clip = CropFixedPatch(VoicedClip(90, kPatch), kPatch);
  EXPECT_THROW(ProtectionObjective(params_, clip, 4, PhlWeights{}, 0.2, 30.0), Error);
  clip.rate = 8000;
  EXPECT_THROW(ProtectionObjective(params_, clip, 0, PhlWeights{}, 0.2, 30.0), Error);
  SlemConfig c = FastConfig();
  c.mask_keep_fraction = -0.1;
  EXPECT_THROW(c.Validate(), Error);
  c = FastConfig();
  c.epsilon = -1.0;
  EXPECT_THROW(c.Validate(), Error);
  c = FastConfig();
  c.step_size = 0.0;
  EXPECT_THROW(c.Validate(), Error);
}

TEST_F(ObjectiveTest, GenerationRespectsConstraints) {
  const AudioClip clip = VoicedClip(100, 12000);
  const SlemConfig c = FastConfig();
  const Perturbation p = GenerateSampleWise(params_, clip, 1, c);
  ASSERT_EQ(p.delta.size(), kPatch);
  EXPECT_LE(p.MaxAbs(), c.epsilon);
  EXPECT_GT(p.MaxAbs(), 0.0);
  for (std::size_t i = 0; i < kPatch; ++i) {
    if (!p.mask[i]) ASSERT_EQ(p.delta[i], 0.0);
  }
  EXPECT_EQ(p.mask, AmplitudeMask(CropFixedPatch(clip, kPatch).samples, 0.5));
  EXPECT_LT(p.final.total, p.initial.total);

  const Perturbation again = GenerateSampleWise(params_, clip, 1, c);
  EXPECT_EQ(again.delta, p.delta);
}

TEST_F(ObjectiveTest, DegenerateBudgetsLeaveDeltaZero) {
  const AudioClip clip = VoicedClip(110, kPatch);
  SlemConfig c = FastConfig();
  c.steps = 0;
  Perturbation p = GenerateSampleWise(params_, clip, 0, c);
  EXPECT_EQ(p.MaxAbs(), 0.0);
  EXPECT_EQ(p.final.total, p.initial.total);
  c = FastConfig();
  c.epsilon = 0.0;
  p = GenerateSampleWise(params_, clip, 0, c);
  EXPECT_EQ(p.MaxAbs(), 0.0);
  const AudioClip out = Apply(clip, p);
  EXPECT_EQ(out.samples, clip.samples);
}

TEST_F(ObjectiveTest, PerceptualTermsChangeThePerturbation) {
  int differing = 0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const AudioClip clip = VoicedClip(120 + s, kPatch);
    SlemConfig c = FastConfig();
    const Perturbation pslem = GenerateSampleWise(params_, clip, static_cast<int>(s % 4), c);
    c.plain_slem = true;
    const Perturbation plain = GenerateSampleWise(params_, clip, static_cast<int>(s % 4), c);
    differing += pslem.delta != plain.delta;
    EXPECT_EQ(plain.final.total, plain.final.arc);
  }
  EXPECT_EQ(differing, 5);
}

TEST(ApplyTest, AddsClampsAndKeepsTail) {
  AudioClip clip;
  clip.rate = kPipelineRate;
  clip.samples = {0.999, -0.999, 0.5, 0.25, 0.1};
  Perturbation p;
  p.delta = {0.005, -0.005, 0.001};
  const AudioClip out = Apply(clip, p);
  EXPECT_EQ(out.samples, (std::vector<double>{1.0, -1.0, 0.5 + 0.001, 0.25, 0.1}));

  AudioClip shorter = clip;
  shorter.samples.resize(2);
  EXPECT_EQ(Apply(shorter, p).samples.size(), 2u);
  clip.rate = 8000;
  EXPECT_THROW(Apply(clip, p), Error);
}

TEST(NoiseTest, BoundedMaskedAndSeeded) {
  const AudioClip clip = VoicedClip(130, kPatch);
  const SlemConfig c = FastConfig();
  const Perturbation a = UniformNoise(clip, c, 5);
  EXPECT_LE(a.MaxAbs(), c.epsilon);
  for (std::size_t i = 0; i < a.delta.size(); ++i) {
    if (!a.mask[i]) ASSERT_EQ(a.delta[i], 0.0);
  }
  EXPECT_EQ(UniformNoise(clip, c, 5).delta, a.delta);
  EXPECT_NE(UniformNoise(clip, c, 6).delta, a.delta);
}

TEST(SpeakerWiseTest, OnePerSpeakerAndDuplicatesRejected) {
  const EncoderParams params = SmallEncoder();
  const SlemConfig c = FastConfig();
  const std::vector<AudioClip> reps = {VoicedClip(140, kPatch), VoicedClip(141, kPatch)};
  const std::vector<int> labels = {3, 1};
  const auto out = GenerateSpeakerWise(params, reps, labels, c);
  ASSERT_EQ(out.size(), 2u);
  const Perturbation single = GenerateSampleWise(params, reps[0], 3, c);
  EXPECT_EQ(out.at(3).delta, single.delta);
  EXPECT_EQ(out.at(3).mode, PerturbationMode::kSpeakerWise);
  try {
    const std::vector<int> dup = {1, 1};
    GenerateSpeakerWise(params, reps, dup, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDuplicateEntry);
  }
}

}  // namespace
}  // namespace voxshield
