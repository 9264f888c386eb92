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

#include "cli_commands.h"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <map>

#include "sadsid/error.h"
#include "sadsid/io.h"
#include "sadsid/nn/serialize.h"
#include "sadsid/pipeline.h"
#include "sadsid/segments.h"

namespace sadsid::cli {
namespace fs = std::filesystem;
namespace {

std::string default_name(Task task, const char* suffix) {
  return std::string(task_name(task)) + suffix;
}

Role role_from(const std::string& text) {
  try {
    return parse_role(text);
  } catch (const Error& e) {
    throw Error(ErrorKind::kConfig, e.what());
  }
}

std::vector<double> parse_list(const std::string& text, const std::string& key) {
  std::vector<double> out;
  if (text.empty()) return out;
  size_t start = 0;
  while (true) {
    const size_t comma = text.find(',', start);
    std::string item = text.substr(start, comma == std::string::npos ? std::string::npos
                                                                    : comma - start);
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    try {
      out.push_back(parse_double(item, key));
    } catch (const Error& e) {
      throw Error(ErrorKind::kConfig, e.what());
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

void print_epoch(std::ostream& out, const nn::EpochStats& e) {
  out << "epoch " << e.epoch << "\ttrain_loss " << format_fixed(e.train_loss, 6)
      << "\ttrain_acc " << format_fixed(e.train_accuracy, 4) << "\tval_loss "
      << format_fixed(e.val_loss, 6) << "\tval_acc " << format_fixed(e.val_accuracy, 4)
      << "\n";
  out.flush();
}

// Registers `--key` with the SADSID_KEY environment override.
template <typename T>
CLI::Option* key(CLI::App* app, const std::string& name, T& target,
                 const std::string& help) {
  std::string env = kEnvPrefix;
  for (char c : name) env += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return app->add_option("--" + name, target, help)->envname(env)->capture_default_str();
}

std::string trim(std::string_view text) {
  const size_t lo = text.find_first_not_of(" \t");
  if (lo == std::string_view::npos) return "";
  const size_t hi = text.find_last_not_of(" \t");
  return std::string(text.substr(lo, hi - lo + 1));
}

// Applies a flat `key = value` file to the options of `sub` that were set
// neither on the command line nor through the environment.
void apply_config_file(CLI::App* sub, const fs::path& path) {
  for (const TextLine& line : read_text_lines(path)) {
    const std::string where = path.string() + ":" + std::to_string(line.number);
    const size_t eq = line.text.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::kConfig, where + ": expected key = value");
    }
    const std::string name = trim(std::string_view(line.text).substr(0, eq));
    std::string value = trim(std::string_view(line.text).substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') &&
        value.back() == value.front()) {
      value = value.substr(1, value.size() - 2);
    }
    CLI::Option* opt = name.empty() || name == "config"
                           ? nullptr
                           : sub->get_option_no_throw("--" + name);
    if (opt == nullptr) {
      throw Error(ErrorKind::kConfig, where + ": unknown config key '" + name + "' for " +
                                          sub->get_name());
    }
    if (opt->count() > 0) continue;
    try {
      opt->add_result(value);
      opt->run_callback();
    } catch (const CLI::ParseError& e) {
      throw Error(ErrorKind::kConfig, where + ": " + name + ": " + e.what());
    }
  }
}

CLI::App* add_subcommand(CLI::App& app, const std::string& name, const std::string& help,
                         std::string& config_path) {
  CLI::App* sub = app.add_subcommand(name, help);
  sub->add_option("--config", config_path,
                  "Flat `key = value` file; its keys are the options listed here");
  return sub;
}

void add_feature_keys(CLI::App* sub, FeatureConfig& f) {
  key(sub, "frame_len_ms", f.frame_len_ms, "Analysis frame length (ms)");
  key(sub, "frame_hop_ms", f.frame_hop_ms, "Frame hop (ms)");
  key(sub, "n_mels", f.n_mels, "Number of mel bands");
  key(sub, "fmin_hz", f.fmin_hz, "Lowest filterbank edge (Hz)");
  key(sub, "fmax_hz", f.fmax_hz, "Highest filterbank edge (Hz), 0 = Nyquist");
  key(sub, "chunk_len_ms", f.chunk_len_ms, "Chunk length (ms)");
  key(sub, "chunk_shift_ms", f.chunk_shift_ms, "Chunk shift (ms)");
  key(sub, "log_floor", f.log_floor, "Added to mel energies before the log");
}

}  // namespace

TrainCommandConfig::TrainCommandConfig(Task t) : task(t) {
  const pipeline::TaskDefaults d = pipeline::task_defaults(t);
  features = d.features;
  train = d.train;
  class_weighting =
      d.weighting == pipeline::ClassWeighting::kInverseFrequency ? "inverse" : "none";
}

InferCommandConfig::InferCommandConfig(Task t) : task(t) {}
ScoreCommandConfig::ScoreCommandConfig(Task t) : task(t) {}

void cmd_synth(const SynthConfig& cfg, std::ostream& out) {
  const SynthResult result = synth_corpus(cfg.spec, cfg.corpus_dir);
  out << "synth: " << result.sad_manifest.size() << " SAD files, "
      << result.sid_manifest.size() << " SID utterances under " << cfg.corpus_dir << "\n";
}

nn::TrainResult cmd_train(const TrainCommandConfig& cfg, std::ostream& out) {
  const fs::path dir = fs::path(cfg.corpus_dir) / task_name(cfg.task);
  const std::string model_path =
      cfg.model.empty() ? default_name(cfg.task, ".model") : cfg.model;
  const std::string history_path =
      cfg.history.empty() ? default_name(cfg.task, "_history.tsv") : cfg.history;
  pipeline::FeatureOptions options{cfg.feature_cache, cfg.train.workers};
  pipeline::ClassWeighting weighting;
  if (cfg.class_weighting == "none") {
    weighting = pipeline::ClassWeighting::kNone;
  } else if (cfg.class_weighting == "inverse") {
    weighting = pipeline::ClassWeighting::kInverseFrequency;
  } else {
    throw Error(ErrorKind::kConfig, "class_weighting must be none or inverse, got '" +
                                        cfg.class_weighting + "'");
  }
  auto on_epoch = [&out](const nn::EpochStats& e) { print_epoch(out, e); };
  nn::TrainResult result =
      cfg.task == Task::kSad
          ? pipeline::train_sad(dir, cfg.features, cfg.train, weighting, options, on_epoch)
          : pipeline::train_sid(dir, cfg.features, cfg.train, weighting, options, on_epoch);
  nn::save_model(result.model, model_path);
  write_text_file(history_path, pipeline::history_tsv(result.history));
  out << "best epoch " << result.best_epoch << (result.early_stopped ? " (early stop)" : "")
      << "; model written to " << model_path << "\n";
  return result;
}

void cmd_infer(const InferCommandConfig& cfg, std::ostream& out) {
  const fs::path dir = fs::path(cfg.corpus_dir) / task_name(cfg.task);
  const std::string model_path =
      cfg.model.empty() ? default_name(cfg.task, ".model") : cfg.model;
  const std::string output = cfg.output.empty() ? default_name(cfg.task, "_sys.tsv")
                                                : cfg.output;
  const Role role = role_from(cfg.role);
  const nn::CnnModel model = nn::load_model(model_path);
  if (model.task != cfg.task) {
    throw Error(ErrorKind::kTask, model_path + " is a " +
                                      std::string(task_name(model.task)) +
                                      " model, but infer-" +
                                      std::string(task_name(cfg.task)) + " needs a " +
                                      std::string(task_name(cfg.task)) + " model");
  }
  pipeline::FeatureOptions options{cfg.feature_cache, cfg.workers};
  size_t n = 0;
  if (cfg.task == Task::kSad) {
    const auto lists = pipeline::infer_sad(model, dir, role, cfg.sad_options, options);
    write_segments_tsv(output, lists);
    n = lists.size();
  } else {
    sid::VoteMode mode;
    if (cfg.vote_mode == "posterior") {
      mode = sid::VoteMode::kCountThenPosterior;
    } else if (cfg.vote_mode == "count") {
      mode = sid::VoteMode::kCountOnly;
    } else {
      throw Error(ErrorKind::kConfig,
                  "vote_mode must be posterior or count, got '" + cfg.vote_mode + "'");
    }
    const auto ranked = pipeline::infer_sid(model, dir, role, mode, options);
    sid::write_sid_output(output, ranked);
    n = ranked.size();
  }
  out << "infer: " << n << " " << cfg.role << " files written to " << output << "\n";
}

ScoreSummary cmd_score(const ScoreCommandConfig& cfg, std::ostream& out, std::ostream& err) {
  const fs::path dir = fs::path(cfg.corpus_dir) / task_name(cfg.task);
  const fs::path ref_path = cfg.ref.empty() ? dir / "ref.tsv" : fs::path(cfg.ref);
  const fs::path manifest_path =
      cfg.manifest.empty() ? dir / "manifest.tsv" : fs::path(cfg.manifest);
  const fs::path sys_path =
      cfg.sys.empty() ? fs::path(default_name(cfg.task, "_sys.tsv")) : fs::path(cfg.sys);
  ScoreSummary summary;

  if (cfg.task == Task::kSad) {
    const auto ref = read_segments_tsv(ref_path);
    const auto sys = read_segments_tsv(sys_path);
    if (!cfg.role.empty()) {
      const Role role = role_from(cfg.role);
      for (const ManifestEntry& e : read_manifest(manifest_path)) {
        if (e.role == role && sys.find(e.file_id) == sys.end()) {
          throw Error(ErrorKind::kScoring, e.file_id + ": no system output for this " +
                                               cfg.role + " file");
        }
      }
    }
    summary.dcf = sad::score_dcf(ref, sys, cfg.collar_s, cfg.workers);
    const std::string report =
        cfg.report.empty() ? default_name(cfg.task, "_report.tsv") : cfg.report;
    write_text_file(report, sad::sad_report_tsv(summary.dcf));
    out << "DCF " << format_fixed(summary.dcf.dcf(), 4) << "\n"
        << "P_FN " << format_fixed(summary.dcf.p_fn(), 4) << "\n"
        << "P_FP " << format_fixed(summary.dcf.p_fp(), 4) << "\n"
        << "files " << summary.dcf.per_file.size() << "\n";
    return summary;
  }

  const auto ref = sid::read_sid_ref(ref_path);
  const auto sys = sid::read_sid_output(sys_path);
  const Manifest manifest = read_manifest(manifest_path);
  const Role role = role_from(cfg.role.empty() ? "eval" : cfg.role);
  const auto trials = pipeline::build_trials(manifest, role, ref, sys, &summary.missing);
  if (trials.empty()) {
    throw Error(ErrorKind::kScoring, manifest_path.string() + ": no " +
                                         std::string(role_name(role)) + " utterances");
  }
  if (summary.missing > 0) {
    err << "warning: " << summary.missing
        << " utterances have no system output and count as misses\n";
  }
  summary.topn = sid::score_topn_vector(trials);
  summary.bins = sid::duration_bins(trials);
  write_text_file(cfg.duration_report, sid::duration_report_tsv(summary.bins));
  write_text_file(cfg.speaker_report,
                  sid::speaker_report_tsv(sid::speaker_accuracy(
                      trials, pipeline::train_seconds_per_speaker(manifest, ref))));
  for (size_t n = 0; n < summary.topn.size(); ++n) {
    out << "TOP" << n + 1 << " " << format_fixed(summary.topn[n], 4) << "\n";
  }
  out << "trials " << trials.size() << "\n";
  return summary;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Speech activity detection and speaker identification with chunked CNNs",
               "sadsid"};
  app.require_subcommand(1, 1);
  std::map<std::string, std::string> config_paths;

  // synth
  SynthConfig synth;
  std::string per_speaker;
  {
    CLI::App* sub = add_subcommand(app, "synth", "Generate the synthetic labelled corpus",
                                   config_paths["synth"]);
    SynthSpec& s = synth.spec;
    key(sub, "corpus_dir", synth.corpus_dir, "Output directory");
    key(sub, "seed", s.seed, "Seed for every random draw");
    key(sub, "workers", s.workers, "Parallel file writers");
    key(sub, "sample_rate_hz", s.sample_rate_hz, "Sample rate (Hz)");
    key(sub, "make_sad", s.make_sad, "Generate the SAD part");
    key(sub, "make_sid", s.make_sid, "Generate the SID part");
    key(sub, "snr_min_db", s.snr_min_db, "Lowest speech-to-noise ratio (dB)");
    key(sub, "snr_max_db", s.snr_max_db, "Highest speech-to-noise ratio (dB)");
    key(sub, "n_speakers", s.n_speakers, "SID speakers");
    key(sub, "per_speaker_train_seconds", per_speaker,
        "Comma-separated training seconds per speaker (empty: linear min..max)");
    key(sub, "train_seconds_min", s.train_seconds_min, "Training seconds of speaker 0");
    key(sub, "train_seconds_max", s.train_seconds_max, "Training seconds of the last speaker");
    key(sub, "utterance_min_s", s.utterance_min_s, "Shortest SID utterance (s)");
    key(sub, "utterance_max_s", s.utterance_max_s, "Longest SID utterance (s)");
    key(sub, "sid_dev_per_speaker", s.sid_dev_per_speaker, "Dev utterances per speaker");
    key(sub, "sid_eval_per_speaker", s.sid_eval_per_speaker, "Eval utterances per speaker");
    key(sub, "sad_speakers", s.sad_speakers, "Voices used in SAD files");
    key(sub, "sad_train_files", s.sad_train_files, "SAD training files");
    key(sub, "sad_dev_files", s.sad_dev_files, "SAD dev files");
    key(sub, "sad_eval_files", s.sad_eval_files, "SAD eval files");
    key(sub, "sad_file_seconds", s.sad_file_seconds, "Length of each SAD file (s)");
    key(sub, "burst_min_s", s.burst_min_s, "Shortest speech burst (s)");
    key(sub, "burst_max_s", s.burst_max_s, "Longest speech burst (s)");
    key(sub, "gap_min_s", s.gap_min_s, "Shortest non-speech gap (s)");
    key(sub, "gap_max_s", s.gap_max_s, "Longest non-speech gap (s)");
    key(sub, "short_burst_prob", s.short_burst_prob,
        "Probability that a gap holds a short (< 0.2 s) speech burst");
    key(sub, "noise_event_prob", s.noise_event_prob,
        "Probability that a gap holds a band-limited noise event");
  }

  // train-sad / train-sid
  TrainCommandConfig train_sad(Task::kSad);
  TrainCommandConfig train_sid(Task::kSid);
  std::string weights_sad;
  std::string weights_sid;
  for (auto* t : {&train_sad, &train_sid}) {
    const bool is_sad = t->task == Task::kSad;
    const std::string name = is_sad ? "train-sad" : "train-sid";
    CLI::App* sub = add_subcommand(app, name,
                                   is_sad ? "Train the speech activity CNN"
                                          : "Train the speaker identification CNN",
                                   config_paths[name]);
    key(sub, "corpus_dir", t->corpus_dir, "Corpus root written by synth");
    key(sub, "model", t->model, "Output model file (default <task>.model)");
    key(sub, "history", t->history, "Epoch history TSV (default <task>_history.tsv)");
    key(sub, "feature_cache", t->feature_cache, "Feature cache directory (empty: off)");
    key(sub, "workers", t->train.workers, "Worker threads");
    key(sub, "seed", t->train.seed, "Initialization and shuffling seed");
    add_feature_keys(sub, t->features);
    key(sub, "learning_rate", t->train.learning_rate, "Adam step size");
    key(sub, "adam_beta1", t->train.adam_beta1, "Adam first-moment decay");
    key(sub, "adam_beta2", t->train.adam_beta2, "Adam second-moment decay");
    key(sub, "adam_epsilon", t->train.adam_epsilon, "Adam denominator offset");
    key(sub, "batch_size", t->train.batch_size, "Minibatch size");
    key(sub, "max_epochs", t->train.max_epochs, "Epoch limit");
    key(sub, "early_stop_patience", t->train.early_stop_patience,
        "Epochs without validation improvement before stopping");
    key(sub, "grad_shards", t->train.grad_shards,
        "Gradient shards per minibatch (fixes the reduction order)");
    key(sub, "class_weights", is_sad ? weights_sad : weights_sid,
        "Comma-separated per-class loss weights (overrides class_weighting)");
    key(sub, "class_weighting", t->class_weighting,
        "none, or inverse for inverse-frequency class weights");
  }

  // infer-sad / infer-sid
  InferCommandConfig infer_sad(Task::kSad);
  InferCommandConfig infer_sid(Task::kSid);
  for (auto* c : {&infer_sad, &infer_sid}) {
    const bool is_sad = c->task == Task::kSad;
    const std::string name = is_sad ? "infer-sad" : "infer-sid";
    CLI::App* sub = add_subcommand(app, name,
                                   is_sad ? "Write speech segments for one corpus role"
                                          : "Write ranked speakers for one corpus role",
                                   config_paths[name]);
    key(sub, "corpus_dir", c->corpus_dir, "Corpus root written by synth");
    key(sub, "model", c->model, "Model file (default <task>.model)");
    key(sub, "output", c->output, "System output TSV (default <task>_sys.tsv)");
    key(sub, "role", c->role, "Corpus role to process: train, dev or eval");
    key(sub, "feature_cache", c->feature_cache, "Feature cache directory (empty: off)");
    key(sub, "workers", c->workers, "Worker threads");
    if (is_sad) {
      key(sub, "average_posteriors", c->sad_options.average_posteriors,
          "Average the two chunks covering each region");
      key(sub, "min_duration_s", c->sad_options.min_duration_s,
          "Relabel segments shorter than this (0: off)");
    } else {
      key(sub, "vote_mode", c->vote_mode,
          "posterior: rank by count then posterior sum; count: by count only");
    }
  }

  // score-sad / score-sid
  ScoreCommandConfig score_sad(Task::kSad);
  ScoreCommandConfig score_sid(Task::kSid);
  for (auto* c : {&score_sad, &score_sid}) {
    const bool is_sad = c->task == Task::kSad;
    const std::string name = is_sad ? "score-sad" : "score-sid";
    CLI::App* sub = add_subcommand(app, name,
                                   is_sad ? "Score SAD output with the collar DCF"
                                          : "Score SID output with top-N accuracy",
                                   config_paths[name]);
    key(sub, "corpus_dir", c->corpus_dir, "Corpus root written by synth");
    key(sub, "ref", c->ref, "Reference TSV (default <corpus_dir>/<task>/ref.tsv)");
    key(sub, "manifest", c->manifest,
        "Manifest (default <corpus_dir>/<task>/manifest.tsv)");
    key(sub, "sys", c->sys, "System output TSV (default <task>_sys.tsv)");
    key(sub, "role", c->role,
        is_sad ? "Every file of this role must be scored (empty: score what sys lists)"
               : "Corpus role whose utterances are the trials");
    key(sub, "workers", c->workers, "Worker threads");
    if (is_sad) {
      key(sub, "collar_s", c->collar_s, "Unscored half-width around reference changes (s)");
      key(sub, "report", c->report, "Per-file report TSV (default sad_report.tsv)");
    } else {
      key(sub, "duration_report", c->duration_report, "Hit/miss rate by test duration TSV");
      key(sub, "speaker_report", c->speaker_report, "Accuracy by training speaker TSV");
    }
  }

  std::vector<const char*> argv;
  argv.push_back("sadsid");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: config: " << msg << "\n";
    return 2;
  }

  try {
    CLI::App* chosen = app.get_subcommands().front();
    const std::string name = chosen->get_name();
    if (!config_paths[name].empty()) apply_config_file(chosen, config_paths[name]);
    if (name == "synth") {
      synth.spec.per_speaker_train_seconds =
          parse_list(per_speaker, "per_speaker_train_seconds");
      cmd_synth(synth, out);
    } else if (name == "train-sad" || name == "train-sid") {
      TrainCommandConfig& t = name == "train-sad" ? train_sad : train_sid;
      t.train.class_weights = parse_list(name == "train-sad" ? weights_sad : weights_sid,
                                         "class_weights");
      cmd_train(t, out);
    } else if (name == "infer-sad") {
      cmd_infer(infer_sad, out);
    } else if (name == "infer-sid") {
      cmd_infer(infer_sid, out);
    } else if (name == "score-sad") {
      cmd_score(score_sad, out, err);
    } else {
      cmd_score(score_sid, out, err);
    }
  } catch (const Error& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << error_kind_name(e.kind()) << ": " << msg << "\n";
    return e.kind() == ErrorKind::kConfig ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace sadsid::cli
