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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <set>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "voxshield/error.h"
#include "voxshield/parallel.h"
#include "voxshield/random.h"

namespace voxshield {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kF0Slots = 28;  // 90, 96, ..., 252 Hz
constexpr double kMaxHarmonicHz = 4000.0;
constexpr double kNoiseLevel = 0.08;  // relative to the voiced RMS
constexpr double kPeak = 0.5;

std::string SpeakerDir(int speaker) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "spk%03d", speaker);
  return buf;
}

std::string UtteranceName(int utt) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "utt%03d.wav", utt);
  return buf;
}

std::string RelativePath(int speaker, int utt) {
  return "wav/" + SpeakerDir(speaker) + "/" + UtteranceName(utt);
}

// Sum of Lorentzian peaks; a small floor keeps every harmonic audible.
double ResonanceGain(const std::array<double, 3>& formants,
                     const std::array<double, 3>& bandwidths, double f) {
  double g = 0.05;
  for (std::size_t i = 0; i < formants.size(); ++i) {
    const double u = (f - formants[i]) / bandwidths[i];
    g += 1.0 / (1.0 + u * u);
  }
  return g;
}

// Two-pole resonator bank driven by white noise.
std::vector<double> ResonantNoise(Rng& rng, std::size_t n,
                                  const std::array<double, 3>& formants,
                                  const std::array<double, 3>& bandwidths, int rate) {
  std::vector<double> white(n);
  for (double& v : white) v = rng.Normal();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < formants.size(); ++i) {
    const double r = std::exp(-std::numbers::pi * bandwidths[i] / rate);
    const double a1 = 2.0 * r * std::cos(kTwoPi * formants[i] / rate);
    const double a2 = -r * r;
    double y1 = 0.0, y2 = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double y = (1.0 - r) * white[t] + a1 * y1 + a2 * y2;
      y2 = y1;
      y1 = y;
      out[t] += y;
    }
  }
  return out;
}

double Rms(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return x.empty() ? 0.0 : std::sqrt(s / static_cast<double>(x.size()));
}

}  // namespace

void CorpusSpec::Validate() const {
  if (n_speakers < 2) throw Error(ErrorCode::kInvalidArgument, "need at least 2 speakers");
  if (utterances_per_speaker < 3) {
    throw Error(ErrorCode::kInvalidArgument,
                "need at least 3 utterances per speaker (one to train, two held out)");
  }
  if (!(duration_s > 0.0) || rate <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "duration and rate must be positive");
  }
  if (SamplesPerUtterance() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "duration is shorter than one sample");
  }
}

std::size_t CorpusSpec::SamplesPerUtterance() const {
  return static_cast<std::size_t>(std::llround(duration_s * rate));
}

std::uint32_t CorpusSpec::TrainPerSpeaker() const {
  const auto train = static_cast<std::uint32_t>(std::llround(0.8 * utterances_per_speaker));
  return std::min(train, utterances_per_speaker - 2);
}

SpeakerProfile SynthSpeakerProfile(int speaker_id, std::uint64_t seed) {
  if (speaker_id < 0) throw Error(ErrorCode::kInvalidArgument, "negative speaker id");
  std::vector<int> slots(kF0Slots);
  std::iota(slots.begin(), slots.end(), 0);
  Rng slot_rng(DeriveSeed(seed, 0xF0));
  slot_rng.Shuffle(slots.begin(), slots.end());

  SpeakerProfile p;
  p.speaker_id = speaker_id;
  const int slot = slots[static_cast<std::size_t>(speaker_id % kF0Slots)];
  const int round = (speaker_id / kF0Slots) % 2;
  p.f0_hz = kMinF0 + kF0Spacing * slot + 0.5 * kF0Spacing * round;

  Rng rng(DeriveSeed(seed, 0xA000 + static_cast<std::uint64_t>(speaker_id)));
  p.formants_hz = {rng.Uniform(300.0, 900.0), rng.Uniform(1000.0, 2200.0),
                   rng.Uniform(2400.0, 3600.0)};
  p.bandwidths_hz = {rng.Uniform(60.0, 120.0), rng.Uniform(80.0, 160.0),
                     rng.Uniform(120.0, 240.0)};
  p.tilt_db_per_octave = rng.Uniform(-9.0, -4.0);
  return p;
}

AudioClip SynthUtterance(const SpeakerProfile& profile, int utterance_id,
                         const CorpusSpec& spec) {
  spec.Validate();
  const std::size_t n = spec.SamplesPerUtterance();
  const double fs = spec.rate;
  Rng rng(DeriveSeed(DeriveSeed(spec.seed, 0xB000 + static_cast<std::uint64_t>(profile.speaker_id)),
                     static_cast<std::uint64_t>(utterance_id)));

  const double f0 = profile.f0_hz * rng.Uniform(0.96, 1.04);
  std::array<double, 3> formants = profile.formants_hz;
  for (double& f : formants) f *= rng.Uniform(0.95, 1.05);
  const double vibrato_depth = rng.Uniform(0.02, 0.06);
  const double vibrato_rate = rng.Uniform(0.5, 1.5);
  const double vibrato_phase = rng.Uniform(0.0, kTwoPi);
  const double syllable_rate = rng.Uniform(3.0, 5.0);
  const double syllable_phase = rng.Uniform(0.0, kTwoPi);

  const std::size_t harmonics =
      std::max<std::size_t>(1, static_cast<std::size_t>(kMaxHarmonicHz / f0));
  std::vector<double> amp(harmonics), start(harmonics);
  for (std::size_t k = 0; k < harmonics; ++k) {
    const double f = f0 * static_cast<double>(k + 1);
    const double octaves = std::log2(f / 100.0);
    amp[k] = std::pow(10.0, profile.tilt_db_per_octave * octaves / 20.0) *
             ResonanceGain(formants, profile.bandwidths_hz, f);
    start[k] = rng.Uniform(0.0, kTwoPi);
  }

  std::vector<double> voiced(n, 0.0);
  double phase = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double time = static_cast<double>(t) / fs;
    double v = 0.0;
    for (std::size_t k = 0; k < harmonics; ++k) {
      v += amp[k] * std::sin(static_cast<double>(k + 1) * phase + start[k]);
    }
    voiced[t] = v;
    const double inst = f0 * (1.0 + vibrato_depth * std::sin(kTwoPi * vibrato_rate * time +
                                                             vibrato_phase));
    phase = std::fmod(phase + kTwoPi * inst / fs, kTwoPi);
  }

  std::vector<double> noise = ResonantNoise(rng, n, formants, profile.bandwidths_hz, spec.rate);
  const double noise_scale = kNoiseLevel * Rms(voiced) / std::max(Rms(noise), 1e-12);

  AudioClip clip{std::vector<double>(n), spec.rate};
  double peak = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double time = static_cast<double>(t) / fs;
    const double s = 0.5 - 0.5 * std::cos(kTwoPi * syllable_rate * time + syllable_phase);
    const double env = 0.1 + 0.9 * s * std::sqrt(s);
    clip.samples[t] = env * (voiced[t] + noise_scale * noise[t]);
    peak = std::max(peak, std::abs(clip.samples[t]));
  }
  for (double& v : clip.samples) v *= kPeak / peak;
  return clip;
}

CorpusPaths BuildCorpus(const CorpusSpec& spec, const std::filesystem::path& out_dir) {
  spec.Validate();
  const int speakers = static_cast<int>(spec.n_speakers);
  const int per = static_cast<int>(spec.utterances_per_speaker);
  const int train = static_cast<int>(spec.TrainPerSpeaker());

  std::error_code ec;
  for (int s = 0; s < speakers; ++s) {
    std::filesystem::create_directories(out_dir / "wav" / SpeakerDir(s), ec);
    if (ec) {
      throw Error(ErrorCode::kIoFailure,
                  "cannot create " + (out_dir / "wav").string() + ": " + ec.message());
    }
  }

  std::vector<SpeakerProfile> profiles;
  for (int s = 0; s < speakers; ++s) profiles.push_back(SynthSpeakerProfile(s, spec.seed));
  ParallelFor(static_cast<std::size_t>(speakers * per), [&](std::size_t i) {
    const int s = static_cast<int>(i) / per;
    const int u = static_cast<int>(i) % per;
    WriteWav(out_dir / RelativePath(s, u), SynthUtterance(profiles[s], u, spec));
  });

  DatasetManifest manifest;
  manifest.base_dir = out_dir;
  manifest.num_speakers = speakers;
  for (int s = 0; s < speakers; ++s) {
    for (int u = 0; u < train; ++u) manifest.entries.push_back({RelativePath(s, u), s});
  }

  TrialList trials;
  trials.base_dir = out_dir;
  for (int s = 0; s < speakers; ++s) {
    for (int a = train; a < per; ++a) {
      for (int b = a + 1; b < per; ++b) {
        trials.trials.push_back({true, RelativePath(s, a), RelativePath(s, b)});
      }
    }
  }
  const std::size_t targets = trials.trials.size();
  const std::size_t held = static_cast<std::size_t>(per - train);
  const std::size_t possible = held * held * static_cast<std::size_t>(speakers) *
                               static_cast<std::size_t>(speakers - 1) / 2;
  const std::size_t nontargets = std::min(targets, possible);
  Rng rng(DeriveSeed(spec.seed, 0xC000));
  std::set<std::pair<int, int>> used;  // flattened utterance indices, a < b
  while (used.size() < nontargets) {
    const int sa = static_cast<int>(rng.Below(static_cast<std::uint64_t>(speakers)));
    int sb = static_cast<int>(rng.Below(static_cast<std::uint64_t>(speakers - 1)));
    if (sb >= sa) ++sb;
    const int ua = train + static_cast<int>(rng.Below(held));
    const int ub = train + static_cast<int>(rng.Below(held));
    const int fa = sa * per + ua, fb = sb * per + ub;
    if (!used.emplace(std::min(fa, fb), std::max(fa, fb)).second) continue;
    trials.trials.push_back({false, RelativePath(sa, ua), RelativePath(sb, ub)});
  }

  CorpusPaths paths{out_dir / "train.csv", out_dir / "trials.txt"};
  SaveManifest(paths.manifest, manifest);
  SaveTrials(paths.trials, trials);
  return paths;
}

}  // namespace voxshield
