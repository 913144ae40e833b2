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

#include "voxshield/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "voxshield/error.h"
#include "voxshield/parallel.h"
#include "voxshield/perceptual.h"

namespace voxshield {
namespace {

void CheckScores(const ScoreSet& scores) {
  if (scores.target_scores.empty() || scores.nontarget_scores.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "score set needs at least one target and one nontarget score");
  }
  for (const auto* list : {&scores.target_scores, &scores.nontarget_scores}) {
    for (double s : *list) {
      if (!std::isfinite(s)) throw Error(ErrorCode::kInvalidArgument, "non-finite score");
    }
  }
}

std::string FormatNumber(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

void DcfParams::Validate() const {
  if (!(p_target > 0.0 && p_target < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "p_target must lie in (0, 1)");
  }
  if (!(c_miss > 0.0) || !(c_fa > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "detection costs must be positive");
  }
}

double CosineScore(const Embedding& a, const Embedding& b) {
  if (a.values.size() != b.values.size()) {
    throw Error(ErrorCode::kInvalidArgument, "embedding dimensions differ");
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) dot += a.values[i] * b.values[i];
  return dot;
}

ScoreSet ScoreTrials(const EncoderParams& params, const TrialList& trials,
                     std::size_t patch_length) {
  std::map<std::string, std::size_t> slot;
  std::vector<std::string> paths;
  bool has_target = false, has_nontarget = false;
  for (const Trial& t : trials.trials) {
    (t.same_speaker ? has_target : has_nontarget) = true;
    for (const std::string* p : {&t.path_a, &t.path_b}) {
      if (slot.emplace(*p, paths.size()).second) paths.push_back(*p);
    }
  }
  if (!has_target || !has_nontarget) {
    throw Error(ErrorCode::kInvalidArgument,
                "trial list needs both same-speaker and different-speaker trials");
  }

  const LogMelFrontEnd front_end(params.config.Features());
  std::vector<Embedding> embeddings(paths.size());
  ParallelFor(paths.size(), [&](std::size_t i) {
    embeddings[i] = EmbedClip(params, front_end, ReadWav(trials.base_dir / paths[i]),
                              patch_length);
  });

  ScoreSet out;
  for (const Trial& t : trials.trials) {
    const double s = CosineScore(embeddings[slot.at(t.path_a)], embeddings[slot.at(t.path_b)]);
    (t.same_speaker ? out.target_scores : out.nontarget_scores).push_back(s);
  }
  return out;
}

std::vector<OperatingPoint> DetCurve(const ScoreSet& scores) {
  CheckScores(scores);
  std::vector<double> targets = scores.target_scores;
  std::vector<double> nontargets = scores.nontarget_scores;
  std::sort(targets.begin(), targets.end());
  std::sort(nontargets.begin(), nontargets.end());

  std::vector<double> thresholds;
  thresholds.reserve(targets.size() + nontargets.size() + 2);
  thresholds.push_back(-std::numeric_limits<double>::infinity());
  std::merge(targets.begin(), targets.end(), nontargets.begin(), nontargets.end(),
             std::back_inserter(thresholds));
  thresholds.push_back(std::numeric_limits<double>::infinity());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  const double nt = static_cast<double>(targets.size());
  const double nn = static_cast<double>(nontargets.size());
  std::vector<OperatingPoint> curve;
  curve.reserve(thresholds.size());
  std::size_t below_t = 0, below_n = 0;
  for (double th : thresholds) {
    while (below_t < targets.size() && targets[below_t] < th) ++below_t;
    while (below_n < nontargets.size() && nontargets[below_n] < th) ++below_n;
    curve.push_back({th, static_cast<double>(below_t) / nt,
                     static_cast<double>(nontargets.size() - below_n) / nn});
  }
  return curve;
}

double EqualErrorRate(const ScoreSet& scores) {
  const std::vector<OperatingPoint> curve = DetCurve(scores);
  for (std::size_t k = 0; k < curve.size(); ++k) {
    const double diff = curve[k].frr - curve[k].far;
    if (diff < 0.0) continue;
    if (diff == 0.0 || k == 0) return 100.0 * curve[k].frr;
    const OperatingPoint& a = curve[k - 1];
    const OperatingPoint& b = curve[k];
    const double da = a.frr - a.far;
    const double s = -da / (diff - da);
    return 100.0 * (a.frr + s * (b.frr - a.frr));
  }
  return 100.0;  // unreachable: the +inf threshold has frr = 1, far = 0
}

double MinDcf(const ScoreSet& scores, const DcfParams& params) {
  params.Validate();
  double best = std::numeric_limits<double>::infinity();
  for (const OperatingPoint& p : DetCurve(scores)) {
    const double dcf = params.c_miss * p.frr * params.p_target +
                       params.c_fa * p.far * (1.0 - params.p_target);
    best = std::min(best, dcf);
  }
  return best / std::min(params.c_miss * params.p_target,
                         params.c_fa * (1.0 - params.p_target));
}

AuditReport ComputeAudit(const std::filesystem::path& clean_dir,
                         const std::filesystem::path& protected_dir,
                         const DatasetManifest& manifest, std::size_t patch_length) {
  AuditReport report;
  report.rows.resize(manifest.entries.size());
  ParallelFor(manifest.entries.size(), [&](std::size_t i) {
    const std::string& rel = manifest.entries[i].path;
    const AudioClip clean = ReadWav(clean_dir / rel);
    const AudioClip prot = ReadWav(protected_dir / rel);
    if (clean.size() != prot.size() || clean.rate != prot.rate) {
      throw Error(ErrorCode::kLengthMismatch,
                  "protected file " + (protected_dir / rel).string() +
                      " does not match its clean counterpart");
    }
    const AudioClip c = CropFixedPatch(clean, std::min(patch_length, clean.size()));
    const AudioClip p = CropFixedPatch(prot, std::min(patch_length, prot.size()));
    AuditRow& row = report.rows[i];
    row.path = rel;
    std::vector<double> noise(c.size());
    bool any = false;
    for (std::size_t t = 0; t < c.size(); ++t) {
      noise[t] = p.samples[t] - c.samples[t];
      any = any || noise[t] != 0.0;
    }
    if (any) row.snr_db = SnrDb(c.samples, noise);
    row.mse_e6 = ReportedMse(c.samples, p.samples);
    row.stoi = StoiScore(c, p);
  });

  double snr_sum = 0.0;
  std::size_t snr_count = 0;
  for (const AuditRow& row : report.rows) {
    if (row.snr_db) {
      snr_sum += *row.snr_db;
      ++snr_count;
    }
    report.mean_mse_e6 += row.mse_e6;
    report.mean_stoi += row.stoi;
  }
  if (!report.rows.empty()) {
    report.mean_mse_e6 /= static_cast<double>(report.rows.size());
    report.mean_stoi /= static_cast<double>(report.rows.size());
  }
  if (snr_count > 0) report.mean_snr_db = snr_sum / static_cast<double>(snr_count);
  return report;
}

void WriteAuditCsv(std::ostream& out, const AuditReport& report) {
  const auto snr = [](const std::optional<double>& v) {
    return v ? FormatNumber(*v) : std::string("zero_noise");
  };
  out << "path,snr_db,mse_e6,stoi\n";
  for (const AuditRow& row : report.rows) {
    out << row.path << ',' << snr(row.snr_db) << ',' << FormatNumber(row.mse_e6) << ','
        << FormatNumber(row.stoi) << '\n';
  }
  out << "MEAN," << snr(report.mean_snr_db) << ',' << FormatNumber(report.mean_mse_e6)
      << ',' << FormatNumber(report.mean_stoi) << '\n';
}

}  // namespace voxshield
