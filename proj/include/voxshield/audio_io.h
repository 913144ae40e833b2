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

#ifndef VOXSHIELD_AUDIO_IO_H_
#define VOXSHIELD_AUDIO_IO_H_

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace voxshield {

// Mono waveform. Samples are finite and lie in [-1, 1]; rate is in Hz.
struct AudioClip {
  std::vector<double> samples;
  int rate = 0;

  std::size_t size() const { return samples.size(); }
};

// Throws Error(kInvalidArgument) if the clip breaks its invariants.
void ValidateClip(const AudioClip& clip);

// 16-bit PCM mono WAV. Samples are int16 / 32768 on read; on write they are
// rounded to the nearest integer step and clamped to [-32768, 32767].
AudioClip ReadWav(const std::filesystem::path& path);
void WriteWav(const std::filesystem::path& path, const AudioClip& clip);

// Default fixed patch: 2 s at 16 kHz.
inline constexpr std::size_t kDefaultPatchLength = 32000;

// Exactly `length` samples: the prefix of a longer clip, or a shorter clip
// repeated cyclically.
AudioClip CropFixedPatch(const AudioClip& clip, std::size_t length);

struct ManifestEntry {
  std::string path;  // as written in the manifest (relative to base_dir)
  int speaker = 0;   // contiguous 0..S-1
};

struct DatasetManifest {
  std::filesystem::path base_dir;
  std::vector<ManifestEntry> entries;
  int num_speakers = 0;

  std::filesystem::path Resolve(const ManifestEntry& entry) const {
    return base_dir / entry.path;
  }
};

// `path,speaker_id` per line; '#' starts a comment line. Speaker ids are
// remapped to 0..S-1 in order of first appearance.
DatasetManifest LoadManifest(const std::filesystem::path& path);
void SaveManifest(const std::filesystem::path& path,
                  const DatasetManifest& manifest);

struct Trial {
  bool same_speaker = false;
  std::string path_a;
  std::string path_b;
};

struct TrialList {
  std::filesystem::path base_dir;
  std::vector<Trial> trials;
};

// `<0|1> <pathA> <pathB>` per line.
TrialList LoadTrials(const std::filesystem::path& path);
void SaveTrials(const std::filesystem::path& path, const TrialList& trials);

}  // namespace voxshield

#endif  // VOXSHIELD_AUDIO_IO_H_
