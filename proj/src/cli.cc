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

#include "voxshield/cli.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "CLI11.hpp"
#include "voxshield/audio_io.h"
#include "voxshield/encoder.h"
#include "voxshield/error.h"
#include "voxshield/metrics.h"
#include "voxshield/parallel.h"
#include "voxshield/pipeline.h"
#include "voxshield/slem.h"
#include "voxshield/synthdata.h"

namespace voxshield {
namespace {

const char* const kSubcommands[] = {"synth", "train", "protect", "evaluate", "audit",
                                    "experiment"};

bool IsSubcommand(const std::string& s) {
  return std::find(std::begin(kSubcommands), std::end(kSubcommands), s) !=
         std::end(kSubcommands);
}

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string Fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct Globals {
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

struct EncoderFlags {
  std::string name = "cfgA";
  std::optional<std::uint32_t> n_mels, channels, embedding_dim;

  void Register(CLI::App* app) {
    app->add_option("--config,--encoder", name, "Named encoder config (cfgA..cfgD)");
    app->add_option("--n-mels", n_mels, "Override mel band count");
    app->add_option("--channels", channels, "Override convolution channels");
    app->add_option("--embedding-dim", embedding_dim, "Override embedding size");
  }

  EncoderConfig Build(std::uint64_t seed) const {
    EncoderConfig cfg = NamedEncoderConfig(name);
    if (n_mels) cfg.n_mels = *n_mels;
    if (channels) cfg.channels = *channels;
    if (embedding_dim) cfg.embedding_dim = *embedding_dim;
    cfg.seed = seed;
    return cfg;
  }
};

void RegisterTrain(CLI::App* app, TrainOptions& o) {
  app->add_option("--lr", o.learning_rate, "Learning rate")->check(CLI::PositiveNumber);
  app->add_option("--batch", o.batch_size, "Mini-batch size")->check(CLI::PositiveNumber);
  app->add_option("--margin", o.margin, "Angular margin");
  app->add_option("--scale", o.scale, "Logit scale")->check(CLI::PositiveNumber);
  app->add_option("--patch-length", o.patch_length, "Fixed patch length in samples")
      ->check(CLI::PositiveNumber);
}

void RegisterSlem(CLI::App* app, SlemConfig& c) {
  app->add_option("--epsilon", c.epsilon, "Perturbation bound");
  app->add_option("--steps", c.steps, "Signed-gradient steps");
  app->add_option("--step-size", c.step_size, "Step size (default epsilon / 10)");
  app->add_option("--mask-keep", c.mask_keep_fraction, "Fraction of samples perturbed");
  app->add_option("--alpha", c.weights.alpha, "Angular margin loss weight");
  app->add_option("--beta", c.weights.beta, "STFT loss weight");
  app->add_option("--gamma", c.weights.gamma, "STOI loss weight");
  app->add_option("--lambda", c.weights.lambda, "Envelope L1 weight inside the STOI loss");
  app->add_flag("--plain-slem", c.plain_slem, "Drop the perceptual loss terms");
}

void RegisterDcf(CLI::App* app, DcfParams& d) {
  app->add_option("--p-target", d.p_target, "Target prior for minDCF");
  app->add_option("--c-miss", d.c_miss, "Miss cost for minDCF");
  app->add_option("--c-fa", d.c_fa, "False-alarm cost for minDCF");
}

void RegisterCorpus(CLI::App* app, CorpusSpec& s) {
  app->add_option("--speakers", s.n_speakers, "Number of speakers");
  app->add_option("--utterances", s.utterances_per_speaker, "Utterances per speaker");
  app->add_option("--duration", s.duration_s, "Utterance length in seconds");
}

ProtectionKind ParseMode(const std::string& mode) {
  if (mode == "sample") return ProtectionKind::kSampleWise;
  if (mode == "speaker") return ProtectionKind::kSpeakerWise;
  if (mode == "random") return ProtectionKind::kRandomNoise;
  throw Error(ErrorCode::kInvalidArgument, "unknown mode " + mode);
}

void PrintResults(std::ostream& out, const std::vector<ExperimentRow>& rows) {
  out << std::left << std::setw(15) << "condition" << std::setw(8) << "model"
      << std::setw(10) << "EER%" << std::setw(10) << "minDCF" << std::setw(12) << "SNR dB"
      << std::setw(12) << "MSE e-6" << "STOI\n";
  for (const ExperimentRow& r : rows) {
    out << std::setw(15) << r.condition << std::setw(8) << r.train_config << std::setw(10)
        << Fmt(r.eer_pct) << std::setw(10) << Fmt(r.min_dcf) << std::setw(12)
        << (r.mean_snr_db ? Fmt(*r.mean_snr_db) : std::string("-")) << std::setw(12)
        << Fmt(r.mean_mse_e6) << Fmt(r.mean_stoi) << '\n';
  }
}

}  // namespace

std::vector<std::string> ConfigFileArguments(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kFileNotFound, "cannot open config file " + path);
  std::vector<std::string> out;
  std::string line;
  for (int number = 1; std::getline(in, line); ++number) {
    const std::string body = Trim(line.substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string key = eq == std::string::npos ? "" : Trim(body.substr(0, eq));
    if (key.empty() || key.find(' ') != std::string::npos) {
      throw Error(ErrorCode::kMalformedLine,
                  path + ":" + std::to_string(number) + ": expected key = value");
    }
    out.push_back("--" + key + "=" + Trim(body.substr(eq + 1)));
  }
  return out;
}

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Speaker-data protection with error-minimizing perturbations", "voxshield"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  Globals globals;
  app.add_option("--seed", globals.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", globals.threads, "Worker threads (0 = auto)");

  // synth
  CorpusSpec corpus;
  std::string synth_out;
  CLI::App* synth = app.add_subcommand("synth", "Build the synthetic toy corpus");
  synth->fallthrough();
  synth->add_option("--out", synth_out, "Output directory")->required();
  RegisterCorpus(synth, corpus);

  // train
  EncoderFlags train_encoder;
  TrainOptions train_options;
  std::string train_manifest, train_out, train_trials;
  std::size_t train_epochs = 8;
  CLI::App* train = app.add_subcommand("train", "Train a speaker encoder");
  train->fallthrough();
  train->add_option("--manifest", train_manifest, "Training manifest")->required();
  train->add_option("--out", train_out, "Model file to write")->required();
  train->add_option("--epochs", train_epochs, "Training epochs");
  train->add_option("--trials", train_trials, "Optional held-out trial list");
  train_encoder.Register(train);
  RegisterTrain(train, train_options);

  // protect
  SlemConfig slem;
  std::string protect_model, protect_manifest, protect_out, protect_mode = "sample";
  CLI::App* protect = app.add_subcommand("protect", "Write a protected corpus mirror");
  protect->fallthrough();
  protect->add_option("--model", protect_model, "Generator model file")->required();
  protect->add_option("--manifest", protect_manifest, "Manifest to protect")->required();
  protect->add_option("--out", protect_out, "Output directory")->required();
  protect->add_option("--mode", protect_mode, "sample, speaker or random");
  protect->add_option("--patch-length", slem.patch_length, "Fixed patch length in samples");
  protect->add_option("--margin", slem.margin, "Angular margin");
  protect->add_option("--scale", slem.scale, "Logit scale");
  RegisterSlem(protect, slem);

  // evaluate
  EncoderFlags eval_encoder;
  TrainOptions eval_options;
  DcfParams eval_dcf;
  std::string eval_manifest, eval_trials;
  std::size_t eval_epochs = 8;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Train a fresh model and score trials");
  evaluate->fallthrough();
  evaluate->add_option("--manifest", eval_manifest, "Training manifest")->required();
  evaluate->add_option("--trials", eval_trials, "Trial list")->required();
  evaluate->add_option("--epochs", eval_epochs, "Training epochs");
  eval_encoder.Register(evaluate);
  RegisterTrain(evaluate, eval_options);
  RegisterDcf(evaluate, eval_dcf);

  // audit
  std::string audit_clean, audit_protected, audit_manifest, audit_out;
  std::size_t audit_patch = kDefaultPatchLength;
  CLI::App* audit = app.add_subcommand("audit", "Compare clean and protected corpora");
  audit->fallthrough();
  audit->add_option("--manifest", audit_manifest, "Manifest listing the files")->required();
  audit->add_option("--clean-dir", audit_clean, "Clean corpus root (default: manifest dir)");
  audit->add_option("--protected-dir", audit_protected, "Protected corpus root")->required();
  audit->add_option("--out", audit_out, "CSV output file (default: stdout)");
  audit->add_option("--patch-length", audit_patch, "Fixed patch length in samples");

  // experiment
  ExperimentConfig experiment;
  std::string exp_out, exp_results;
  CLI::App* exp = app.add_subcommand("experiment", "Run the full protection experiment");
  exp->fallthrough();
  exp->add_option("--out", exp_out, "Working directory")->required();
  exp->add_option("--results", exp_results, "Results CSV (default: <out>/results.csv)");
  exp->add_option("--generator-config", experiment.generator_config, "Generator encoder");
  exp->add_option("--transfer-config", experiment.transfer_config, "Transfer encoder");
  exp->add_option("--generator-epochs", experiment.generator_epochs, "Generator epochs");
  exp->add_option("--eval-epochs", experiment.eval_epochs, "Evaluation epochs");
  RegisterCorpus(exp, experiment.corpus);
  RegisterSlem(exp, experiment.slem);
  RegisterTrain(exp, experiment.train);
  RegisterDcf(exp, experiment.dcf);

  try {
    // Global options (including --config <file>) precede the subcommand;
    // config-file entries are inserted right after it so flags win.
    std::vector<std::string> argv{"voxshield"};
    std::vector<std::string> injected;
    std::size_t i = 0;
    for (; i < args.size() && !IsSubcommand(args[i]); ++i) {
      const std::string& a = args[i];
      if (a == "--config" && i + 1 < args.size()) {
        injected = ConfigFileArguments(args[++i]);
      } else if (a.rfind("--config=", 0) == 0) {
        injected = ConfigFileArguments(a.substr(9));
      } else {
        argv.push_back(a);
      }
    }
    if (i < args.size()) {
      argv.push_back(args[i++]);
      argv.insert(argv.end(), injected.begin(), injected.end());
      argv.insert(argv.end(), args.begin() + static_cast<std::ptrdiff_t>(i), args.end());
    }
    std::reverse(argv.begin(), argv.end());
    argv.pop_back();  // program name
    try {
      app.parse(argv);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? 0 : 1;
    }
    SetThreadCount(globals.threads);

    if (*synth) {
      corpus.seed = globals.seed;
      const CorpusPaths paths = BuildCorpus(corpus, synth_out);
      out << "manifest: " << paths.manifest.string() << '\n'
          << "trials: " << paths.trials.string() << '\n';
    } else if (*train) {
      const DatasetManifest manifest = LoadManifest(train_manifest);
      const TrialList trials = train_trials.empty() ? TrialList{} : LoadTrials(train_trials);
      const TrainResult result = TrainEncoder(manifest, train_encoder.Build(globals.seed),
                                              train_epochs, train_options);
      SaveModel(train_out, result.params);
      for (std::size_t e = 0; e < result.epoch_losses.size(); ++e) {
        out << "epoch " << e + 1 << " loss=" << Fmt(result.epoch_losses[e]) << '\n';
      }
      if (!result.epoch_losses.empty()) {
        out << "final_loss=" << Fmt(result.epoch_losses.back()) << '\n';
      }
      if (!train_trials.empty()) {
        const ScoreSet scores = ScoreTrials(result.params, trials, train_options.patch_length);
        out << "EER=" << Fmt(EqualErrorRate(scores)) << "% minDCF=" << Fmt(MinDcf(scores))
            << '\n';
      }
    } else if (*protect) {
      const ProtectionKind kind = ParseMode(protect_mode);
      slem.mode = kind == ProtectionKind::kSpeakerWise ? PerturbationMode::kSpeakerWise
                                                       : PerturbationMode::kSampleWise;
      const EncoderParams params = LoadModel(protect_model);
      const DatasetManifest manifest = LoadManifest(protect_manifest);
      const ProtectedCorpus result =
          ProtectCorpus(params, manifest, slem, kind, protect_out, globals.seed);
      double linf = 0.0;
      for (const ProtectionRecord& r : result.records) linf = std::max(linf, r.linf);
      out << "protected " << result.records.size() << " files ("
          << result.perturbations.size() << " perturbations), max |delta|=" << Fmt(linf)
          << '\n'
          << "manifest: " << result.manifest.string() << '\n';
    } else if (*evaluate) {
      const DatasetManifest manifest = LoadManifest(eval_manifest);
      const TrialList trials = LoadTrials(eval_trials);
      eval_dcf.Validate();
      const TrainResult result = TrainEncoder(manifest, eval_encoder.Build(globals.seed),
                                              eval_epochs, eval_options);
      const ScoreSet scores = ScoreTrials(result.params, trials, eval_options.patch_length);
      out << "EER=" << Fmt(EqualErrorRate(scores)) << "% minDCF="
          << Fmt(MinDcf(scores, eval_dcf)) << '\n';
    } else if (*audit) {
      const DatasetManifest manifest = LoadManifest(audit_manifest);
      const std::filesystem::path clean_dir =
          audit_clean.empty() ? manifest.base_dir : std::filesystem::path(audit_clean);
      const AuditReport report = ComputeAudit(clean_dir, audit_protected, manifest, audit_patch);
      if (audit_out.empty()) {
        WriteAuditCsv(out, report);
      } else {
        std::ofstream file(audit_out, std::ios::binary | std::ios::trunc);
        if (!file) throw Error(ErrorCode::kIoFailure, "cannot write " + audit_out);
        WriteAuditCsv(file, report);
        if (!file) throw Error(ErrorCode::kIoFailure, "failed writing " + audit_out);
      }
    } else if (*exp) {
      experiment.seed = globals.seed;
      const std::filesystem::path results =
          exp_results.empty() ? std::filesystem::path(exp_out) / "results.csv"
                              : std::filesystem::path(exp_results);
      const std::vector<ExperimentRow> rows = RunExperiment(experiment, exp_out, results, &err);
      PrintResults(out, rows);
      out << "results: " << results.string() << '\n';
    }
    return 0;
  } catch (const Error& e) {
    err << "error (" << ErrorCodeName(e.code()) << "): " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return 1;
}

}  // namespace voxshield
