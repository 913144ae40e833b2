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

#ifndef VOXSHIELD_SYNTHDATA_H_
#define VOXSHIELD_SYNTHDATA_H_

#include <array>
#include <cstdint>
#include <filesystem>

#include "voxshield/audio_io.h"

namespace voxshield {

struct CorpusSpec {
  std::uint32_t n_speakers = 20;
  std::uint32_t utterances_per_speaker = 30;
  double duration_s = 2.0;
  int rate = 16000;
  std::uint64_t seed = 0;

  void Validate() const;
  std::size_t SamplesPerUtterance() const;
  // 80% of each speaker's utterances train; at least two are held out.
  std::uint32_t TrainPerSpeaker() const;
};

struct SpeakerProfile {
  int speaker_id = 0;
  double f0_hz = 0.0;
  std::array<double, 3> formants_hz{};
  std::array<double, 3> bandwidths_hz{};
  double tilt_db_per_octave = 0.0;
};

inline constexpr double kMinF0 = 90.0;
inline constexpr double kMaxF0 = 260.0;
inline constexpr double kF0Spacing = 6.0;

SpeakerProfile SynthSpeakerProfile(int speaker_id, std::uint64_t seed);

// Peak-normalized to 0.5.
AudioClip SynthUtterance(const SpeakerProfile& profile, int utterance_id,
                         const CorpusSpec& spec);

struct CorpusPaths {
  std::filesystem::path manifest;
  std::filesystem::path trials;
};

// Writes wav/spkSSS/uttUUU.wav, train.csv and trials.txt under out_dir.
// Trials pair held-out utterances: every same-speaker pair plus an equal
// number of distinct cross-speaker pairs.
CorpusPaths BuildCorpus(const CorpusSpec& spec, const std::filesystem::path& out_dir);

}  // namespace voxshield

#endif  // VOXSHIELD_SYNTHDATA_H_
