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

#include "voxshield/synthdata.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include "test_util.h"
#include "voxshield/encoder.h"
#include "voxshield/error.h"
#include "voxshield/metrics.h"

namespace voxshield {
namespace {

using testing::TempDir;

std::string FileBytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

TEST(CorpusSpecTest, DefaultsAndValidation) {
  const CorpusSpec spec;
  EXPECT_EQ(spec.SamplesPerUtterance(), 32000u);
  EXPECT_EQ(spec.TrainPerSpeaker(), 24u);
  CorpusSpec small;
  small.utterances_per_speaker = 3;
  EXPECT_EQ(small.TrainPerSpeaker(), 1u);
  small.utterances_per_speaker = 2;
  EXPECT_THROW(small.Validate(), Error);
  small = CorpusSpec{};
  small.n_speakers = 1;
  EXPECT_THROW(small.Validate(), Error);
  small = CorpusSpec{};
  small.duration_s = 0.0;
  EXPECT_THROW(small.Validate(), Error);
}

TEST(ProfileTest, DeterministicSpacedAndInRange) {
  std::vector<double> f0s;
  for (int s = 0; s < 20; ++s) {
    const SpeakerProfile p = SynthSpeakerProfile(s, 7);
    const SpeakerProfile q = SynthSpeakerProfile(s, 7);
    EXPECT_EQ(p.f0_hz, q.f0_hz);
    EXPECT_EQ(p.formants_hz, q.formants_hz);
    EXPECT_GE(p.f0_hz, kMinF0);
    EXPECT_LE(p.f0_hz, kMaxF0);
    EXPECT_LT(p.formants_hz[0], p.formants_hz[1]);
    EXPECT_LT(p.formants_hz[1], p.formants_hz[2]);
    EXPECT_GE(p.tilt_db_per_octave, -9.0);
    EXPECT_LE(p.tilt_db_per_octave, -4.0);
    f0s.push_back(p.f0_hz);
  }
  std::sort(f0s.begin(), f0s.end());
  for (std::size_t i = 1; i < f0s.size(); ++i) EXPECT_GE(f0s[i] - f0s[i - 1], kF0Spacing - 1e-9);
  EXPECT_NE(SynthSpeakerProfile(0, 8).formants_hz, SynthSpeakerProfile(0, 7).formants_hz);
  EXPECT_THROW(SynthSpeakerProfile(-1, 7), Error);
}

TEST(UtteranceTest, LengthPeakAndDeterminism) {
  CorpusSpec spec;
  spec.seed = 3;
  const SpeakerProfile p = SynthSpeakerProfile(2, spec.seed);
  const AudioClip a = SynthUtterance(p, 4, spec);
  EXPECT_EQ(a.rate, 16000);
  EXPECT_EQ(a.size(), 32000u);
  double peak = 0.0;
  for (double v : a.samples) peak = std::max(peak, std::abs(v));
  EXPECT_NEAR(peak, 0.5, 1e-12);
  EXPECT_EQ(SynthUtterance(p, 4, spec).samples, a.samples);
  EXPECT_NE(SynthUtterance(p, 5, spec).samples, a.samples);
}

TEST(CorpusTest, LayoutSplitTrialsAndRegeneration) {
  TempDir a("synth_a"), b("synth_b");
  CorpusSpec spec;
  spec.seed = 11;
  const CorpusPaths paths = BuildCorpus(spec, a.path());

  std::size_t wavs = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(a / "wav")) {
    wavs += e.path().extension() == ".wav";
  }
  EXPECT_EQ(wavs, 600u);

  const DatasetManifest m = LoadManifest(paths.manifest);
  EXPECT_EQ(m.entries.size(), 480u);
  EXPECT_EQ(m.num_speakers, 20);
  std::set<std::string> train_paths;
  for (const ManifestEntry& e : m.entries) train_paths.insert(e.path);

  const TrialList trials = LoadTrials(paths.trials);
  std::size_t targets = 0;
  std::set<std::pair<std::string, std::string>> unique;
  for (const Trial& t : trials.trials) {
    targets += t.same_speaker;
    EXPECT_FALSE(train_paths.count(t.path_a)) << t.path_a;
    EXPECT_FALSE(train_paths.count(t.path_b)) << t.path_b;
    EXPECT_EQ(t.path_a.substr(0, 10) == t.path_b.substr(0, 10), t.same_speaker);
    unique.insert({t.path_a, t.path_b});
  }
  EXPECT_EQ(targets, 300u);
  EXPECT_EQ(trials.trials.size(), 600u);
  EXPECT_EQ(unique.size(), 600u);

  const CorpusPaths again = BuildCorpus(spec, b.path());
  EXPECT_EQ(FileBytes(again.trials), FileBytes(paths.trials));
  for (const ManifestEntry& e : m.entries) {
    ASSERT_EQ(FileBytes(b / e.path), FileBytes(a / e.path)) << e.path;
  }
  EXPECT_EQ(FileBytes(b / "wav/spk019/utt029.wav"), FileBytes(a / "wav/spk019/utt029.wav"));
}

// A briefly trained surrogate separates the synthetic speakers.
TEST(CorpusTest, CleanSurrogateLearnsSpeakers) {
  TempDir dir("synth_eer");
  CorpusSpec spec;
  spec.seed = 7;
  const CorpusPaths paths = BuildCorpus(spec, dir.path());
  EncoderConfig config = NamedEncoderConfig("cfgA");
  config.seed = 1;
  const TrainResult trained = TrainEncoder(LoadManifest(paths.manifest), config, 8, {});
  const double eer = EqualErrorRate(ScoreTrials(trained.params, LoadTrials(paths.trials)));
  EXPECT_LT(eer, 20.0);
}

}  // namespace
}  // namespace voxshield
