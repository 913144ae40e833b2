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

#include "voxshield/pipeline.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <system_error>

#include "voxshield/error.h"
#include "voxshield/parallel.h"
#include "voxshield/perceptual.h"
#include "voxshield/random.h"

namespace voxshield {
namespace {

std::string Num(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return buf;
}

std::string OptNum(const std::optional<double>& v, int digits, const char* empty) {
  return v ? Num(*v, digits) : std::string(empty);
}

void EnsureDir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIoFailure, "cannot create " + dir.string() + ": " + ec.message());
  }
}

std::ofstream OpenOut(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + path.string());
  return out;
}

// Applies the perturbation, writes the file and fills the record's
// distortion fields from the waveform actually produced.
void EmitProtected(const AudioClip& clip, const Perturbation& p,
                   const std::filesystem::path& out_path, ProtectionRecord& record) {
  const AudioClip out = Apply(clip, p);
  const std::size_t n = std::min(clip.size(), p.delta.size());
  std::vector<double> clean(clip.samples.begin(), clip.samples.begin() + n);
  std::vector<double> noisy(out.samples.begin(), out.samples.begin() + n);
  std::vector<double> noise(n);
  bool any = false;
  for (std::size_t t = 0; t < n; ++t) {
    noise[t] = noisy[t] - clean[t];
    any = any || noise[t] != 0.0;
  }
  record.linf = p.MaxAbs();
  record.snr_db = any ? std::optional<double>(SnrDb(clean, noise)) : std::nullopt;
  record.mse_e6 = ReportedMse(clean, noisy);
  std::error_code ec;
  std::filesystem::create_directories(out_path.parent_path(), ec);  // WriteWav reports failures
  WriteWav(out_path, out);
}

}  // namespace

ProtectedCorpus ProtectCorpus(const EncoderParams& params,
                              const DatasetManifest& manifest,
                              const SlemConfig& config, ProtectionKind kind,
                              const std::filesystem::path& out_dir,
                              std::uint64_t seed) {
  config.Validate();
  EnsureDir(out_dir);
  const std::size_t n = manifest.entries.size();
  ProtectedCorpus result;
  result.records.resize(n);

  if (kind == ProtectionKind::kSpeakerWise) {
    std::map<int, std::size_t> first;
    for (std::size_t i = 0; i < n; ++i) first.emplace(manifest.entries[i].speaker, i);
    std::vector<AudioClip> reps;
    std::vector<int> labels;
    for (const auto& [speaker, index] : first) {
      reps.push_back(ReadWav(manifest.Resolve(manifest.entries[index])));
      labels.push_back(speaker);
    }
    std::map<int, Perturbation> per_speaker =
        GenerateSpeakerWise(params, reps, labels, config);
    ParallelFor(n, [&](std::size_t i) {
      const ManifestEntry& e = manifest.entries[i];
      const Perturbation& p = per_speaker.at(e.speaker);
      ProtectionRecord& r = result.records[i];
      r.path = e.path;
      r.source = "spk:" + std::to_string(e.speaker);
      r.initial_loss = p.initial.total;
      r.final_loss = p.final.total;
      EmitProtected(ReadWav(manifest.Resolve(e)), p, out_dir / e.path, r);
    });
    for (auto& [speaker, p] : per_speaker) result.perturbations.push_back(std::move(p));
  } else {
    result.perturbations.resize(n);
    ParallelFor(n, [&](std::size_t i) {
      const ManifestEntry& e = manifest.entries[i];
      const AudioClip clip = ReadWav(manifest.Resolve(e));
      ProtectionRecord& r = result.records[i];
      r.path = e.path;
      Perturbation& p = result.perturbations[i];
      if (kind == ProtectionKind::kRandomNoise) {
        p = UniformNoise(clip, config, DeriveSeed(seed, i));
        r.source = "rand:" + std::to_string(i);
      } else {
        p = GenerateSampleWise(params, clip, e.speaker, config);
        r.source = "utt:" + std::to_string(i);
        r.initial_loss = p.initial.total;
        r.final_loss = p.final.total;
      }
      EmitProtected(clip, p, out_dir / e.path, r);
    });
  }

  DatasetManifest mirrored = manifest;
  mirrored.base_dir = out_dir;
  result.manifest = out_dir / "manifest.csv";
  SaveManifest(result.manifest, mirrored);

  std::ofstream log = OpenOut(out_dir / "protection.log");
  log << "path,source,initial_loss,final_loss,linf,snr_db,mse_e6\n";
  for (const ProtectionRecord& r : result.records) {
    log << r.path << ',' << r.source << ',' << OptNum(r.initial_loss, 9, "") << ','
        << OptNum(r.final_loss, 9, "") << ',' << Num(r.linf, 9) << ','
        << OptNum(r.snr_db, 9, "zero_noise") << ',' << Num(r.mse_e6, 9) << '\n';
  }
  if (!log) throw Error(ErrorCode::kIoFailure, "failed writing protection.log");
  return result;
}

void WriteResultsCsv(const std::filesystem::path& path,
                     const std::vector<ExperimentRow>& rows, const std::string* failure) {
  std::ofstream out = OpenOut(path);
  out << "condition,train_config,eer_pct,min_dcf,mean_snr_db,mean_mse_e6,mean_stoi\n";
  for (const ExperimentRow& r : rows) {
    out << r.condition << ',' << r.train_config << ',' << Num(r.eer_pct, 6) << ','
        << Num(r.min_dcf, 6) << ',' << OptNum(r.mean_snr_db, 6, "zero_noise") << ','
        << Num(r.mean_mse_e6, 6) << ',' << Num(r.mean_stoi, 6) << '\n';
  }
  if (failure) {
    std::string msg = *failure;
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    out << "FAILED," << msg << ",,,,,\n";
  }
  if (!out) throw Error(ErrorCode::kIoFailure, "failed writing " + path.string());
}

std::vector<ExperimentRow> RunExperiment(const ExperimentConfig& config,
                                         const std::filesystem::path& work_dir,
                                         const std::filesystem::path& results_csv,
                                         std::ostream* log,
                                         const ProtectionObserver& on_protected) {
  std::vector<ExperimentRow> rows;
  const auto note = [&](const std::string& line) {
    if (log) *log << line << std::endl;
  };
  try {
    config.slem.Validate();
    config.dcf.Validate();
    EnsureDir(work_dir);
    CorpusSpec spec = config.corpus;
    spec.seed = config.seed;
    note("synthesizing corpus");
    const CorpusPaths paths = BuildCorpus(spec, work_dir / "corpus");
    const DatasetManifest clean = LoadManifest(paths.manifest);
    const TrialList trials = LoadTrials(paths.trials);

    note("training generator " + config.generator_config);
    EncoderConfig gen_cfg = NamedEncoderConfig(config.generator_config);
    gen_cfg.seed = DeriveSeed(config.seed, 1);
    const EncoderParams generator =
        TrainEncoder(clean, gen_cfg, config.generator_epochs, config.train).params;

    struct Condition {
      std::string name;
      DatasetManifest manifest;
      AuditReport audit;
    };
    std::vector<Condition> conditions;
    const auto add_condition = [&](const std::string& name, const DatasetManifest& m) {
      note("auditing " + name);
      conditions.push_back({name, m, ComputeAudit(clean.base_dir, m.base_dir, clean,
                                                   config.slem.patch_length)});
    };
    add_condition("clean", clean);

    SlemConfig plain = config.slem;
    plain.plain_slem = true;
    SlemConfig perceptual = config.slem;
    perceptual.plain_slem = false;
    const struct {
      const char* name;
      const SlemConfig* cfg;
      ProtectionKind kind;
    } protections[] = {
        {"random_noise", &perceptual, ProtectionKind::kRandomNoise},
        {"slem", &plain, ProtectionKind::kSampleWise},
        {"pslem", &perceptual, ProtectionKind::kSampleWise},
        {"speaker_pslem", &perceptual, ProtectionKind::kSpeakerWise},
    };
    for (const auto& p : protections) {
      note(std::string("protecting corpus: ") + p.name);
      const ProtectedCorpus corpus = ProtectCorpus(generator, clean, *p.cfg, p.kind,
                                                   work_dir / p.name, DeriveSeed(config.seed, 3));
      if (on_protected) on_protected(p.name, corpus);
      add_condition(p.name, LoadManifest(corpus.manifest));
    }

    const auto evaluate = [&](const Condition& c, const std::string& cfg_name) {
      note("training " + cfg_name + " on " + c.name);
      EncoderConfig cfg = NamedEncoderConfig(cfg_name);
      cfg.seed = DeriveSeed(config.seed, 2);
      const EncoderParams model =
          TrainEncoder(c.manifest, cfg, config.eval_epochs, config.train).params;
      const ScoreSet scores = ScoreTrials(model, trials, config.train.patch_length);
      ExperimentRow row{c.name, cfg_name, EqualErrorRate(scores), MinDcf(scores, config.dcf),
                        c.audit.mean_snr_db, c.audit.mean_mse_e6, c.audit.mean_stoi};
      note(row.condition + "/" + row.train_config + ": EER=" + Num(row.eer_pct, 6) +
           "% minDCF=" + Num(row.min_dcf, 6));
      rows.push_back(row);
      WriteResultsCsv(results_csv, rows);
    };
    for (const Condition& c : conditions) evaluate(c, config.generator_config);
    evaluate(conditions[0], config.transfer_config);
    evaluate(conditions[3], config.transfer_config);
  } catch (const std::exception& e) {
    const std::string message = e.what();
    try {
      WriteResultsCsv(results_csv, rows, &message);
    } catch (const std::exception&) {
    }
    throw;
  }
  return rows;
}

}  // namespace voxshield
