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

#ifndef VOXSHIELD_PIPELINE_H_
#define VOXSHIELD_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "voxshield/audio_io.h"
#include "voxshield/encoder.h"
#include "voxshield/metrics.h"
#include "voxshield/slem.h"
#include "voxshield/synthdata.h"

namespace voxshield {

enum class ProtectionKind { kSampleWise, kSpeakerWise, kRandomNoise };

struct ProtectionRecord {
  std::string path;
  std::string source;  // utt:<index>, spk:<speaker> or rand:<index>
  std::optional<double> initial_loss;
  std::optional<double> final_loss;
  double linf = 0.0;
  std::optional<double> snr_db;  // empty for a zero perturbation
  double mse_e6 = 0.0;
};

struct ProtectedCorpus {
  std::filesystem::path manifest;
  std::vector<ProtectionRecord> records;
  // One entry per manifest line (sample-wise, random) or per speaker.
  std::vector<Perturbation> perturbations;
};

// Writes the protected mirror of every manifest file under out_dir, plus
// manifest.csv and protection.log. Speaker-wise mode uses each speaker's
// first manifest utterance as its representative. `seed` drives the
// random-noise baseline only.
ProtectedCorpus ProtectCorpus(const EncoderParams& params,
                              const DatasetManifest& manifest,
                              const SlemConfig& config, ProtectionKind kind,
                              const std::filesystem::path& out_dir,
                              std::uint64_t seed);

struct ExperimentConfig {
  CorpusSpec corpus;
  SlemConfig slem;
  TrainOptions train;
  DcfParams dcf;
  std::string generator_config = "cfgA";
  std::string transfer_config = "cfgB";
  std::size_t generator_epochs = 8;
  std::size_t eval_epochs = 8;
  std::uint64_t seed = 0;
};

struct ExperimentRow {
  std::string condition;
  std::string train_config;
  double eer_pct = 0.0;
  double min_dcf = 0.0;
  std::optional<double> mean_snr_db;
  double mean_mse_e6 = 0.0;
  double mean_stoi = 0.0;
};

// Header plus one line per row; `failure` appends a FAILED marker row.
void WriteResultsCsv(const std::filesystem::path& path,
                     const std::vector<ExperimentRow>& rows,
                     const std::string* failure = nullptr);

// Called once per protected corpus with the condition name.
using ProtectionObserver =
    std::function<void(const std::string& condition, const ProtectedCorpus& corpus)>;

// synth -> generator -> clean / random_noise / slem / pslem / speaker_pslem
// corpora -> fresh models on each -> results. The CSV is rewritten after
// every row; on failure it ends with a FAILED row and the error is rethrown.
std::vector<ExperimentRow> RunExperiment(const ExperimentConfig& config,
                                         const std::filesystem::path& work_dir,
                                         const std::filesystem::path& results_csv,
                                         std::ostream* log = nullptr,
                                         const ProtectionObserver& on_protected = {});

}  // namespace voxshield

#endif  // VOXSHIELD_PIPELINE_H_
