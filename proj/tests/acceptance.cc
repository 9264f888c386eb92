// Copyright 2026 The sadsid Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero when any of them fails.
//
//   acceptance [--only NAME[,NAME...]] [--workdir DIR]
//
// Without --workdir the end-to-end corpora live in a temporary directory
// that is removed afterwards.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli_commands.h"
#include "sadsid/error.h"
#include "sadsid/io.h"
#include "sadsid/nn/serialize.h"
#include "support/oracles.h"

namespace sadsid {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double budget_s;  // wall-clock limit, part of the criterion
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---- property criteria ------------------------------------------------------

Outcome gradient_check() {
  double worst = 0.0;
  int checked = 0, skipped = 0;
  std::string where;
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const testing::GradProblem p = testing::random_grad_problem(seed);
    const testing::GradCheck r = testing::finite_difference_check(
        p.model, p.inputs, p.batch, p.labels, p.class_weights, 1e-6, 1e-6);
    checked += r.checked;
    skipped += r.skipped_kinks;
    if (r.max_rel_error > worst) {
      worst = r.max_rel_error;
      where = "seed " + std::to_string(seed) + " " + r.worst;
    }
  }
  return {worst < 1e-4 && checked > 0,
          "max_rel_error=" + fmt("%.3e", worst) + " checked=" + std::to_string(checked) +
              " kink_skips=" + std::to_string(skipped) + (where.empty() ? "" : " at " + where)};
}

Outcome conv_oracle() {
  double worst = 0.0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    const testing::ConvTrial t = testing::random_conv_trial(seed + 1000);
    int rh = 0, rw = 0, lh = 0, lw = 0;
    const auto want = testing::conv2d_reference(t.shape, t.input, t.weights, t.bias, &rh, &rw);
    const auto got = testing::conv2d_library(t, &lh, &lw);
    if (rh != lh || rw != lw || want.size() != got.size()) {
      return {false, "shape mismatch at seed " + std::to_string(seed)};
    }
    for (size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
  }
  return {worst <= 1e-12, "max_abs_diff=" + fmt("%.3e", worst) + " shapes=100"};
}

Outcome dcf_oracle() {
  std::mt19937_64 gen(4242);
  double worst = 0.0;
  int single_class = 0;
  const int collars[] = {250, 0, 100, 500};
  for (int trial = 0; trial < 100; ++trial) {
    const int duration = 1000 + static_cast<int>(gen() % 29000);
    SegmentList ref;
    if (trial % 5 == 0) {
      ++single_class;
      const SpeechLabel label = trial % 10 == 0 ? SpeechLabel::kSpeech : SpeechLabel::kNonSpeech;
      ref = SegmentList{"f", {{0.0, duration / 1000.0, label}}, duration / 1000.0};
    } else {
      ref = testing::random_segmentation(gen(), "f", duration, 50, 3000, true);
    }
    const SegmentList sys =
        testing::random_segmentation(gen(), "f", duration, 20, 2500, trial % 2 == 0);
    const int collar = trial % 7 == 6 ? static_cast<int>(gen() % 700) : collars[trial % 4];
    const double got = sad::score_file(ref, sys, collar / 1000.0).dcf();
    const double want = testing::grid_dcf(ref, sys, collar).dcf();
    worst = std::max(worst, std::abs(got - want));
  }
  return {worst <= 1e-9, "max_abs_diff=" + fmt("%.3e", worst) +
                             " cases=100 single_class=" + std::to_string(single_class)};
}

Outcome vote_oracle() {
  std::mt19937_64 gen(99);
  int mismatches = 0;
  for (uint64_t trial = 0; trial < 1000; ++trial) {
    const int n_speakers = std::uniform_int_distribution<int>(1, 20)(gen);
    const int n_chunks = std::uniform_int_distribution<int>(1, 50)(gen);
    const auto lists = testing::random_hypotheses(trial + 77000, n_speakers, n_chunks);
    if (sid::vote(lists) != testing::vote_reference(lists, n_speakers, 5, false)) ++mismatches;
  }
  return {mismatches == 0, "mismatches=" + std::to_string(mismatches) + "/1000"};
}

Outcome overfit_smoke() {
  const nn::ChunkDataset toy = testing::overfit_toy_set(7);
  nn::CnnModel model = nn::build_architecture(Task::kSad, 32, 40, {"S", "NS"}, 7);
  nn::TrainConfig cfg;
  cfg.max_epochs = 500;
  cfg.early_stop_patience = 500;
  int reached = 0;
  const nn::TrainResult r = nn::train(model, toy, toy, cfg, [&](const nn::EpochStats& s) {
    if (reached == 0 && s.val_loss < 0.01) reached = s.epoch;
  });
  const double loss = nn::evaluate(r.model, toy, {}, 64, 1).loss;
  return {toy.size() == 50 && loss < 0.01 && reached > 0,
          "chunks=" + std::to_string(toy.size()) + " final_training_loss=" + fmt("%.3e", loss) +
              " first_epoch_below_0.01=" + std::to_string(reached)};
}

Outcome serialization() {
  nn::CnnModel m = nn::build_architecture(Task::kSad, 32, 40, {"S", "NS"}, 5);
  std::mt19937_64 gen(6);
  std::normal_distribution<double> g;
  for (auto p : m.parameters()) {
    for (double& v : p) v += 0.01 * g(gen);
  }
  m.norm_stats.mean.assign(40, 0.5);
  m.norm_stats.std.assign(40, 2.0);
  testing::TempDir dir("accept_model");
  nn::save_model(m, dir / "m.model");
  const nn::CnnModel back = nn::load_model(dir / "m.model");
  std::vector<double> inputs(100 * m.input_size());
  for (double& v : inputs) v = g(gen);
  const bool same = nn::forward(m, inputs, 100) == nn::forward(back, inputs, 100);

  const std::vector<uint8_t> good = nn::encode_model(m);
  auto kind = [](std::vector<uint8_t> bytes) -> std::optional<ErrorKind> {
    try {
      nn::decode_model(bytes);
    } catch (const Error& e) {
      return e.kind();
    }
    return std::nullopt;
  };
  std::vector<uint8_t> magic = good, version = good, flipped = good, truncated = good,
                       trailing = good;
  magic[0] ^= 0xff;
  version[4] = 99;
  flipped[good.size() / 3] ^= 0x04;
  truncated.resize(good.size() - 7);
  trailing.push_back(1);
  std::optional<ErrorKind> missing;
  try {
    nn::load_model(dir / "absent.model");
  } catch (const Error& e) {
    missing = e.kind();
  }
  const bool taxonomy = kind(magic) == ErrorKind::kFormat &&
                        kind(version) == ErrorKind::kVersion &&
                        kind(flipped) == ErrorKind::kChecksum &&
                        kind(truncated) == ErrorKind::kTruncation &&
                        kind(trailing) == ErrorKind::kFormat && missing == ErrorKind::kIo;
  return {same && taxonomy, std::string("predict_bit_identical=") + (same ? "yes" : "no") +
                                " taxonomy=" + (taxonomy ? "ok" : "wrong")};
}

// ---- end-to-end criteria ----------------------------------------------------

int cli(const std::vector<std::string>& args, std::string* out = nullptr) {
  std::ostringstream o, e;
  const int code = cli::run(args, o, e);
  if (out) *out = o.str();
  if (code != 0) std::cerr << "  sadsid " << args.front() << " failed: " << e.str();
  return code;
}

Outcome e2e_sad(const fs::path& work) {
  const fs::path dir = work / "e2e_sad";
  fs::create_directories(dir);
  cli::SynthConfig synth;
  synth.corpus_dir = (dir / "corpus").string();
  synth.spec.make_sid = false;  // defaults: 60/10/10 files of 60 s, seed 7, 5-20 dB
  std::ostringstream log;
  cli::cmd_synth(synth, log);

  cli::TrainCommandConfig train(Task::kSad);
  train.corpus_dir = synth.corpus_dir;
  train.model = (dir / "sad.model").string();
  train.history = (dir / "sad_history.tsv").string();
  const nn::TrainResult tr = cli::cmd_train(train, log);

  cli::InferCommandConfig infer(Task::kSad);
  infer.corpus_dir = synth.corpus_dir;
  infer.model = train.model;
  infer.output = (dir / "sad_sys.tsv").string();
  cli::cmd_infer(infer, log);

  cli::ScoreCommandConfig score(Task::kSad);
  score.corpus_dir = synth.corpus_dir;
  score.sys = infer.output;
  score.report = (dir / "sad_report.tsv").string();
  const cli::ScoreSummary s = cli::cmd_score(score, log, std::cerr);
  const double dcf = s.dcf.dcf();
  return {dcf <= 0.02 && s.dcf.per_file.size() == 10,
          "eval_DCF=" + fmt("%.4f", 100.0 * dcf) + "% P_FN=" + fmt("%.4f", s.dcf.p_fn()) +
              " P_FP=" + fmt("%.4f", s.dcf.p_fp()) + " epochs=" +
              std::to_string(tr.history.size()) + " best_epoch=" +
              std::to_string(tr.best_epoch)};
}

Outcome e2e_sid(const fs::path& work) {
  const fs::path dir = work / "e2e_sid";
  fs::create_directories(dir);
  cli::SynthConfig synth;
  synth.corpus_dir = (dir / "corpus").string();
  synth.spec.make_sad = false;  // defaults: 8 speakers, 60-500 s train, 1-20 s tests
  std::ostringstream log;
  cli::cmd_synth(synth, log);

  cli::TrainCommandConfig train(Task::kSid);
  train.corpus_dir = synth.corpus_dir;
  train.model = (dir / "sid.model").string();
  train.history = (dir / "sid_history.tsv").string();
  const nn::TrainResult tr = cli::cmd_train(train, log);

  cli::InferCommandConfig infer(Task::kSid);
  infer.corpus_dir = synth.corpus_dir;
  infer.model = train.model;
  infer.output = (dir / "sid_sys.tsv").string();
  cli::cmd_infer(infer, log);

  cli::ScoreCommandConfig score(Task::kSid);
  score.corpus_dir = synth.corpus_dir;
  score.sys = infer.output;
  score.duration_report = (dir / "sid_duration.tsv").string();
  score.speaker_report = (dir / "sid_speakers.tsv").string();
  const cli::ScoreSummary s = cli::cmd_score(score, log, std::cerr);

  bool monotone = true;
  for (size_t n = 1; n < s.topn.size(); ++n) monotone = monotone && s.topn[n] >= s.topn[n - 1];
  bool long_bins = true;
  int long_trials = 0;
  for (const sid::DurationBin& b : s.bins) {
    if (b.lo_s < 10.0 || b.count == 0) continue;
    long_trials += b.count;
    long_bins = long_bins && b.hits == b.count;
  }
  std::string vec;
  for (double v : s.topn) vec += (vec.empty() ? "" : ",") + fmt("%.4f", v);
  const bool pass = s.topn.size() == 5 && s.topn[4] == 1.0 && s.topn[0] >= 0.9 && monotone &&
                    long_bins && long_trials > 0 && s.missing == 0;
  return {pass, "topN=[" + vec + "] monotone=" + (monotone ? "yes" : "no") +
                    " bins>=10s_all_hit=" + (long_bins ? "yes" : "no") + " (" +
                    std::to_string(long_trials) + " trials) epochs=" +
                    std::to_string(tr.history.size())};
}

// Every regular file under `root`, keyed by relative path.
std::map<std::string, std::vector<uint8_t>> snapshot(const fs::path& root) {
  std::map<std::string, std::vector<uint8_t>> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) {
      files[fs::relative(e.path(), root).string()] = read_file_bytes(e.path());
    }
  }
  return files;
}

// synth -> train -> infer for both tasks through the command surface.
std::optional<std::map<std::string, std::vector<uint8_t>>> pipeline_run(const fs::path& root,
                                                                        int workers) {
  const std::string w = std::to_string(workers);
  const std::string corpus = (root / "corpus").string();
  auto at = [&](const std::string& name) { return (root / name).string(); };
  const std::vector<std::vector<std::string>> steps = {
      {"synth", "--corpus_dir", corpus, "--workers", w, "--n_speakers", "4",
       "--per_speaker_train_seconds", "8,12,10,6", "--utterance_min_s", "0.5",
       "--utterance_max_s", "4", "--sid_dev_per_speaker", "1", "--sid_eval_per_speaker", "2",
       "--sad_speakers", "4", "--sad_train_files", "3", "--sad_dev_files", "1",
       "--sad_eval_files", "2", "--sad_file_seconds", "10"},
      {"train-sad", "--corpus_dir", corpus, "--workers", w, "--max_epochs", "2", "--model",
       at("sad.model"), "--history", at("sad_history.tsv"), "--feature_cache", at("cache")},
      {"infer-sad", "--corpus_dir", corpus, "--workers", w, "--model", at("sad.model"),
       "--output", at("sad_sys.tsv"), "--feature_cache", at("cache")},
      {"train-sid", "--corpus_dir", corpus, "--workers", w, "--max_epochs", "1", "--model",
       at("sid.model"), "--history", at("sid_history.tsv")},
      {"infer-sid", "--corpus_dir", corpus, "--workers", w, "--model", at("sid.model"),
       "--output", at("sid_sys.tsv")},
  };
  for (const auto& args : steps) {
    if (cli(args) != 0) return std::nullopt;
  }
  return snapshot(root);
}

Outcome determinism(const fs::path& work) {
  const fs::path dir = work / "determinism";
  std::vector<std::map<std::string, std::vector<uint8_t>>> runs;
  const std::vector<std::pair<std::string, int>> plan = {{"w1a", 1}, {"w1b", 1}, {"w4a", 4},
                                                         {"w4b", 4}};
  for (const auto& [tag, workers] : plan) {
    auto files = pipeline_run(dir / tag, workers);
    if (!files) return {false, "run " + tag + " failed"};
    runs.push_back(std::move(*files));
  }
  std::string diffs;
  for (size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].size() != runs[0].size()) diffs += " file-set(" + plan[r].first + ")";
    for (const auto& [name, bytes] : runs[0]) {
      auto it = runs[r].find(name);
      if (it == runs[r].end() || it->second != bytes) diffs += " " + plan[r].first + ":" + name;
    }
  }
  return {diffs.empty(), std::to_string(runs[0].size()) + " files compared across " +
                             std::to_string(runs.size()) + " runs (workers 1,1,4,4)" +
                             (diffs.empty() ? "" : "; differ:" + diffs)};
}

}  // namespace
}  // namespace sadsid

int main(int argc, char** argv) {
  using namespace sadsid;
  std::set<std::string> only;
  std::optional<fs::path> workdir;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string name; std::getline(ss, name, ',');) only.insert(name);
    } else if (a == "--workdir" && i + 1 < argc) {
      workdir = fs::path(argv[++i]);
    } else {
      std::cerr << "usage: acceptance [--only NAME[,NAME...]] [--workdir DIR]\n";
      return 2;
    }
  }
  std::optional<testing::TempDir> temp;
  if (!workdir) {
    temp.emplace("acceptance");
    workdir = temp->path();
  }
  fs::create_directories(*workdir);
  const fs::path work = *workdir;

  const std::vector<Criterion> criteria = {
      {"gradient-check", 60, gradient_check},
      {"conv-oracle", 30, conv_oracle},
      {"dcf-oracle", 60, dcf_oracle},
      {"vote-oracle", 30, vote_oracle},
      {"overfit-smoke", 120, overfit_smoke},
      {"e2e-sad", 600, [&] { return e2e_sad(work); }},
      {"e2e-sid", 900, [&] { return e2e_sid(work); }},
      {"determinism", 0, [&] { return determinism(work); }},
      {"serialization", 0, serialization},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && !only.count(c.name)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    const bool in_time = c.budget_s <= 0 || secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    std::cout << (pass ? "PASS " : "FAIL ") << c.name << "  " << o.detail << "  time="
              << sadsid::fmt("%.1f", secs) << "s"
              << (c.budget_s > 0 ? " (limit " + sadsid::fmt("%.0f", c.budget_s) + "s)" : "")
              << (in_time ? "" : " OVER TIME LIMIT") << std::endl;
  }
  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}
