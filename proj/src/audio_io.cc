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

#include "voxshield/audio_io.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "voxshield/error.h"

namespace voxshield {
namespace {

std::uint32_t ReadU32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t ReadU16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void PutU16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

std::string Trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void LineError(ErrorCode code, const std::filesystem::path& path,
                            std::size_t line, const std::string& what) {
  throw Error(code, path.string() + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

void ValidateClip(const AudioClip& clip) {
  if (clip.rate <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "sample rate must be positive");
  }
  for (double v : clip.samples) {
    if (!std::isfinite(v) || v < -1.0 || v > 1.0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "sample outside [-1, 1] or not finite");
    }
  }
}

AudioClip ReadWav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kFileNotFound, "cannot open " + path.string());
  }
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
  const auto truncated = [&](const char* what) {
    return Error(ErrorCode::kTruncatedHeader,
                 path.string() + ": truncated header (" + what + ")");
  };
  if (bytes.size() < 12) throw truncated("RIFF");
  if (std::string(bytes.begin(), bytes.begin() + 4) != "RIFF" ||
      std::string(bytes.begin() + 8, bytes.begin() + 12) != "WAVE") {
    throw Error(ErrorCode::kUnsupportedEncoding,
                path.string() + ": not a RIFF/WAVE file");
  }

  bool have_fmt = false;
  int rate = 0;
  std::size_t pos = 12;
  while (true) {
    if (pos + 8 > bytes.size()) throw truncated(have_fmt ? "data" : "fmt");
    const std::string id(bytes.begin() + pos, bytes.begin() + pos + 4);
    const std::size_t size = ReadU32(&bytes[pos + 4]);
    pos += 8;
    if (id == "fmt ") {
      if (size < 16 || pos + 16 > bytes.size()) throw truncated("fmt");
      const std::uint16_t format = ReadU16(&bytes[pos]);
      const std::uint16_t channels = ReadU16(&bytes[pos + 2]);
      rate = static_cast<int>(ReadU32(&bytes[pos + 4]));
      const std::uint16_t bits = ReadU16(&bytes[pos + 14]);
      if (format != 1 || bits != 16) {
        throw Error(ErrorCode::kUnsupportedEncoding,
                    path.string() + ": unsupported encoding (need 16-bit PCM)");
      }
      if (channels != 1) {
        throw Error(ErrorCode::kUnsupportedChannelCount,
                    path.string() + ": unsupported channel count " +
                        std::to_string(channels));
      }
      if (rate <= 0) {
        throw Error(ErrorCode::kUnsupportedEncoding,
                    path.string() + ": invalid sample rate");
      }
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw truncated("fmt");
      if (pos + size > bytes.size()) throw truncated("data");
      AudioClip clip;
      clip.rate = rate;
      clip.samples.resize(size / 2);
      for (std::size_t i = 0; i < clip.samples.size(); ++i) {
        const auto raw = static_cast<std::int16_t>(ReadU16(&bytes[pos + 2 * i]));
        clip.samples[i] = static_cast<double>(raw) / 32768.0;
      }
      return clip;
    }
    pos += size + (size & 1);
  }
}

void WriteWav(const std::filesystem::path& path, const AudioClip& clip) {
  ValidateClip(clip);
  const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  PutU32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  PutU32(out, 16);
  PutU16(out, 1);
  PutU16(out, 1);
  PutU32(out, static_cast<std::uint32_t>(clip.rate));
  PutU32(out, static_cast<std::uint32_t>(clip.rate) * 2);
  PutU16(out, 2);
  PutU16(out, 16);
  out += "data";
  PutU32(out, data_bytes);
  for (double v : clip.samples) {
    const double scaled = std::clamp(std::round(v * 32768.0), -32768.0, 32767.0);
    PutU16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
  }

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorCode::kIoFailure, "cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw Error(ErrorCode::kIoFailure, "write failed: " + path.string());
}

AudioClip CropFixedPatch(const AudioClip& clip, std::size_t length) {
  if (length == 0) {
    throw Error(ErrorCode::kInvalidArgument, "patch length must be positive");
  }
  if (clip.samples.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "cannot crop an empty clip");
  }
  AudioClip out;
  out.rate = clip.rate;
  out.samples.resize(length);
  const std::size_t n = clip.samples.size();
  for (std::size_t i = 0; i < length; ++i) out.samples[i] = clip.samples[i % n];
  return out;
}

DatasetManifest LoadManifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open " + path.string());

  DatasetManifest manifest;
  manifest.base_dir = path.parent_path();
  std::unordered_map<long long, int> remap;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = Trim(line);
    if (text.empty() || text[0] == '#') continue;
    const auto comma = text.rfind(',');
    if (comma == std::string::npos) {
      LineError(ErrorCode::kMalformedLine, path, line_no,
                "expected `path,speaker_id`");
    }
    const std::string file = Trim(text.substr(0, comma));
    const std::string label_text = Trim(text.substr(comma + 1));
    std::size_t consumed = 0;
    long long label = -1;
    try {
      label = std::stoll(label_text, &consumed);
    } catch (const std::exception&) {
      consumed = 0;
    }
    if (file.empty() || consumed != label_text.size() || label < 0) {
      LineError(ErrorCode::kMalformedLine, path, line_no,
                "expected `path,speaker_id` with a non-negative integer id");
    }
    if (!seen.insert(file).second) {
      LineError(ErrorCode::kDuplicateEntry, path, line_no,
                "duplicate path " + file);
    }
    const auto [it, inserted] =
        remap.try_emplace(label, static_cast<int>(remap.size()));
    manifest.entries.push_back({file, it->second});
  }
  manifest.num_speakers = static_cast<int>(remap.size());
  return manifest;
}

void SaveManifest(const std::filesystem::path& path,
                  const DatasetManifest& manifest) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + path.string());
  for (const auto& entry : manifest.entries) {
    out << entry.path << ',' << entry.speaker << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoFailure, "write failed: " + path.string());
}

TrialList LoadTrials(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open " + path.string());

  TrialList list;
  list.base_dir = path.parent_path();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = Trim(line);
    if (text.empty() || text[0] == '#') continue;
    std::istringstream fields(text);
    std::string label, a, b, extra;
    if (!(fields >> label >> a >> b) || (fields >> extra)) {
      LineError(ErrorCode::kMalformedLine, path, line_no,
                "expected `<0|1> <pathA> <pathB>`");
    }
    if (label != "0" && label != "1") {
      LineError(ErrorCode::kInvalidLabel, path, line_no,
                "invalid label " + label);
    }
    list.trials.push_back({label == "1", a, b});
  }
  return list;
}

void SaveTrials(const std::filesystem::path& path, const TrialList& trials) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + path.string());
  for (const auto& t : trials.trials) {
    out << (t.same_speaker ? 1 : 0) << ' ' << t.path_a << ' ' << t.path_b
        << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoFailure, "write failed: " + path.string());
}

}  // namespace voxshield
