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

// Subcommands of the `sadsid` tool. Each takes a flat configuration whose
// keys double as `--key` flags, `key = value` lines of a `--config` file and
// SADSID_<KEY> environment variables (flag > environment > file > default).

#ifndef SADSID_TOOLS_CLI_COMMANDS_H_
#define SADSID_TOOLS_CLI_COMMANDS_H_

#include <ostream>
#include <string>
#include <vector>

#include "sadsid/audio.h"
#include "sadsid/dsp.h"
#include "sadsid/nn/model.h"
#include "sadsid/nn/train.h"
#include "sadsid/pipeline.h"
#include "sadsid/sad.h"
#include "sadsid/sid.h"

namespace sadsid::cli {

inline constexpr const char* kEnvPrefix = "SADSID_";

struct SynthConfig {
  std::string corpus_dir = "corpus";
  SynthSpec spec;
};

struct TrainCommandConfig {
  Task task = Task::kSad;
  std::string corpus_dir = "corpus";
  std::string model;    // default: <task>.model
  std::string history;  // default: <task>_history.tsv
  std::string feature_cache;
  FeatureConfig features;
  nn::TrainConfig train;
  std::string class_weighting;  // "none" or "inverse"; default per task

  explicit TrainCommandConfig(Task t);
};

struct InferCommandConfig {
  Task task = Task::kSad;
  std::string corpus_dir = "corpus";
  std::string model;   // default: <task>.model
  std::string output;  // default: <task>_sys.tsv
  std::string role = "eval";
  std::string feature_cache;
  int workers = 1;
  sad::InferOptions sad_options;
  std::string vote_mode = "posterior";  // or "count"

  explicit InferCommandConfig(Task t);
};

struct ScoreCommandConfig {
  Task task = Task::kSad;
  std::string corpus_dir = "corpus";
  std::string ref;       // default: <corpus_dir>/<task>/ref.tsv
  std::string manifest;  // default: <corpus_dir>/<task>/manifest.tsv
  std::string sys;       // default: <task>_sys.tsv
  std::string role = "eval";
  std::string report;  // SAD per-file report; default sad_report.tsv
  std::string duration_report = "sid_duration.tsv";
  std::string speaker_report = "sid_speakers.tsv";
  double collar_s = sad::kDefaultCollarS;
  int workers = 1;

  explicit ScoreCommandConfig(Task t);
};

void cmd_synth(const SynthConfig& cfg, std::ostream& out);
nn::TrainResult cmd_train(const TrainCommandConfig& cfg, std::ostream& out);
void cmd_infer(const InferCommandConfig& cfg, std::ostream& out);

struct ScoreSummary {
  sad::DcfReport dcf;             // SAD
  std::vector<double> topn;       // SID, n = 1..5
  std::vector<sid::DurationBin> bins;
  int missing = 0;
};
ScoreSummary cmd_score(const ScoreCommandConfig& cfg, std::ostream& out, std::ostream& err);

// Parses argv and runs one subcommand. Returns the process exit status:
// 0 on success, 1 on a library error, 2 on a usage or configuration error.
// Failures print one line `error: <category>: <message>` to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sadsid::cli

#endif  // SADSID_TOOLS_CLI_COMMANDS_H_
