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

#ifndef VOXSHIELD_METRICS_H_
#define VOXSHIELD_METRICS_H_

#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "voxshield/audio_io.h"
#include "voxshield/encoder.h"

namespace voxshield {

struct ScoreSet {
  std::vector<double> target_scores;
  std::vector<double> nontarget_scores;
};

struct DcfParams {
  double p_target = 0.01;
  double c_miss = 1.0;
  double c_fa = 1.0;

  void Validate() const;
};

// Inner product of two unit embeddings.
double CosineScore(const Embedding& a, const Embedding& b);

// Embeds every distinct trial path once and scores each trial.
ScoreSet ScoreTrials(const EncoderParams& params, const TrialList& trials,
                     std::size_t patch_length = kDefaultPatchLength);

// One point of the threshold sweep. A trial is accepted iff score >= t.
struct OperatingPoint {
  double threshold = 0.0;
  double frr = 0.0;  // fraction of targets below threshold
  double far = 0.0;  // fraction of nontargets at or above threshold
};

// Thresholds: -inf, every distinct score ascending, +inf.
std::vector<OperatingPoint> DetCurve(const ScoreSet& scores);

// Percent, linearly interpolated at the FRR/FAR crossing.
double EqualErrorRate(const ScoreSet& scores);

double MinDcf(const ScoreSet& scores, const DcfParams& params = {});

struct AuditRow {
  std::string path;
  std::optional<double> snr_db;  // empty when protected == clean
  double mse_e6 = 0.0;
  double stoi = 0.0;
};

struct AuditReport {
  std::vector<AuditRow> rows;
  // Means over rows; the SNR mean skips zero-noise rows and is empty if
  // every row is one.
  std::optional<double> mean_snr_db;
  double mean_mse_e6 = 0.0;
  double mean_stoi = 0.0;
};

// Compares each manifest file in clean_dir against its counterpart in
// protected_dir over the fixed patch.
AuditReport ComputeAudit(const std::filesystem::path& clean_dir,
                         const std::filesystem::path& protected_dir,
                         const DatasetManifest& manifest,
                         std::size_t patch_length = kDefaultPatchLength);

// `path,snr_db,mse_e6,stoi` rows plus a final MEAN row.
void WriteAuditCsv(std::ostream& out, const AuditReport& report);

}  // namespace voxshield

#endif  // VOXSHIELD_METRICS_H_
