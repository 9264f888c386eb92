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

#include "sadsid/pipeline.h"

#include <algorithm>
#include <set>

#include "sadsid/error.h"
#include "sadsid/io.h"
#include "sadsid/parallel.h"

namespace sadsid::pipeline {
namespace fs = std::filesystem;
namespace {

// Cache files are keyed by utterance id and every feature parameter.
fs::path cache_path(const fs::path& dir, const std::string& id, const FeatureConfig& cfg) {
  std::string name = id + ".fl" + format_fixed(cfg.frame_len_ms, 3) + "_hop" +
                     format_fixed(cfg.frame_hop_ms, 3) + "_m" + std::to_string(cfg.n_mels) +
                     "_lo" + format_fixed(cfg.fmin_hz, 3) + "_hi" +
                     format_fixed(cfg.fmax_hz, 3) + "_fl" + std::to_string(cfg.log_floor) +
                     ".fsmel";
  return dir / name;
}

MelSpectrogram features_for(const ManifestEntry& entry, const fs::path& base_dir,
                            const FeatureConfig& cfg, const FeatureOptions& options) {
  if (!options.cache_dir.empty()) {
    const fs::path cached = cache_path(options.cache_dir, entry.file_id, cfg);
    if (fs::exists(cached)) {
      MelSpectrogram spec = decode_feature_cache(read_file_bytes(cached), entry.file_id);
      spec.frame_len_ms = cfg.frame_len_ms;
      if (spec.n_mels() == cfg.n_mels && spec.frame_hop_ms == cfg.frame_hop_ms) return spec;
    }
  }
  const AudioBuffer audio = read_wav(base_dir / entry.path);
  cfg.validate(audio.sample_rate_hz);
  MelSpectrogram spec = mel_spectrogram(audio, cfg);
  spec.id = entry.file_id;
  round_to_f32(spec);
  if (!options.cache_dir.empty()) {
    write_file_bytes(cache_path(options.cache_dir, entry.file_id, cfg),
                     encode_feature_cache(spec));
  }
  return spec;
}

void require_nonempty(const Manifest& entries, const fs::path& dir, Role role) {
  if (entries.empty()) {
    throw Error(ErrorKind::kEmptyInput, (dir / "manifest.tsv").string() + ": no " +
                                            std::string(role_name(role)) + " entries");
  }
}

nn::TrainConfig weighted(nn::TrainConfig cfg, ClassWeighting weighting,
                         const nn::ChunkDataset& data, int n_classes) {
  if (cfg.class_weights.empty() && weighting == ClassWeighting::kInverseFrequency) {
    cfg.class_weights = nn::inverse_frequency_weights(data, n_classes);
  }
  return cfg;
}

}  // namespace

TaskDefaults task_defaults(Task task) {
  TaskDefaults d;
  if (task == Task::kSad) {
    d.features = FeatureConfig::sad();
    d.train.max_epochs = 6;
    d.weighting = ClassWeighting::kNone;
  } else {
    d.features = FeatureConfig::sid();
    d.train.max_epochs = 4;
    d.weighting = ClassWeighting::kInverseFrequency;
  }
  return d;
}

Manifest select_role(const Manifest& manifest, Role role) {
  Manifest out;
  std::copy_if(manifest.begin(), manifest.end(), std::back_inserter(out),
               [role](const ManifestEntry& e) { return e.role == role; });
  return out;
}

std::vector<FileFeatures> load_features(const Manifest& entries, const fs::path& base_dir,
                                        const FeatureConfig& cfg,
                                        const FeatureOptions& options) {
  std::vector<FileFeatures> out(entries.size());
  parallel_for(entries.size(), options.workers, [&](size_t i) {
    out[i].spec = features_for(entries[i], base_dir, cfg, options);
    out[i].duration_s = entries[i].duration_s;
  });
  return out;
}

NormStats norm_stats_of(const std::vector<FileFeatures>& files) {
  if (files.empty()) throw Error(ErrorKind::kEmptyInput, "no files for norm stats");
  NormAccumulator acc(files.front().spec.n_mels());
  for (const FileFeatures& f : files) acc.add(f.spec.values);
  return acc.finish();
}

nn::ChunkDataset sad_dataset(const std::vector<FileFeatures>& files,
                             const std::map<std::string, SegmentList>& ref,
                             const FeatureConfig& cfg, const NormStats& stats) {
  nn::ChunkDataset data(cfg.chunk_frames(), cfg.n_mels);
  const int shift = cfg.shift_frames();
  for (const FileFeatures& f : files) {
    auto it = ref.find(f.spec.id);
    if (it == ref.end()) {
      throw Error(ErrorKind::kLabel, f.spec.id + ": no reference segments");
    }
    const int n_chunks = chunk_count(f.spec.n_frames(), cfg.chunk_frames(), shift);
    const std::vector<int> labels =
        sad::align_labels(it->second, n_chunks, cfg.chunk_shift_s());
    Matrix values = f.spec.values;
    normalize_in_place(values, stats);
    const int src = data.add_source(std::move(values));
    for (int k = 0; k < n_chunks; ++k) data.add_chunk(src, k * shift, labels[k]);
  }
  return data;
}

nn::ChunkDataset sid_dataset(const std::vector<FileFeatures>& files,
                             const std::map<std::string, std::string>& ref,
                             const std::vector<std::string>& speakers,
                             const FeatureConfig& cfg, const NormStats& stats) {
  nn::ChunkDataset data(cfg.chunk_frames(), cfg.n_mels);
  const int shift = cfg.shift_frames();
  for (const FileFeatures& f : files) {
    auto it = ref.find(f.spec.id);
    if (it == ref.end()) throw Error(ErrorKind::kLabel, f.spec.id + ": no reference speaker");
    auto pos = std::find(speakers.begin(), speakers.end(), it->second);
    if (pos == speakers.end()) {
      throw Error(ErrorKind::kLabel,
                  f.spec.id + ": speaker " + it->second + " is not a training speaker");
    }
    const int label = static_cast<int>(pos - speakers.begin());
    MelSpectrogram padded = sid::wrap_pad(f.spec, cfg.chunk_frames());
    normalize_in_place(padded.values, stats);
    const int n_chunks = chunk_count(padded.n_frames(), cfg.chunk_frames(), shift);
    const int src = data.add_source(std::move(padded.values));
    for (int k = 0; k < n_chunks; ++k) data.add_chunk(src, k * shift, label);
  }
  return data;
}

nn::TrainResult train_sad(const fs::path& sad_dir, const FeatureConfig& cfg,
                          const nn::TrainConfig& train_cfg, ClassWeighting weighting,
                          const FeatureOptions& options,
                          const nn::EpochCallback& on_epoch) {
  train_cfg.validate();
  const Manifest manifest = read_manifest(sad_dir / "manifest.tsv");
  const auto ref = read_segments_tsv(sad_dir / "ref.tsv");
  const Manifest train_entries = select_role(manifest, Role::kTrain);
  const Manifest dev_entries = select_role(manifest, Role::kDev);
  require_nonempty(train_entries, sad_dir, Role::kTrain);
  require_nonempty(dev_entries, sad_dir, Role::kDev);

  const auto train_files = load_features(train_entries, sad_dir, cfg, options);
  const auto dev_files = load_features(dev_entries, sad_dir, cfg, options);
  const NormStats stats = norm_stats_of(train_files);
  const nn::ChunkDataset train_data = sad_dataset(train_files, ref, cfg, stats);
  const nn::ChunkDataset dev_data = sad_dataset(dev_files, ref, cfg, stats);

  nn::CnnModel model = nn::build_architecture(
      Task::kSad, cfg.chunk_frames(), cfg.n_mels,
      {std::string(speech_label_tag(SpeechLabel::kSpeech)),
       std::string(speech_label_tag(SpeechLabel::kNonSpeech))},
      train_cfg.seed);
  model.feature_config = cfg;
  model.norm_stats = stats;
  const int n_classes = model.n_classes();
  return nn::train(std::move(model), train_data, dev_data,
                   weighted(train_cfg, weighting, train_data, n_classes), on_epoch);
}

nn::TrainResult train_sid(const fs::path& sid_dir, const FeatureConfig& cfg,
                          const nn::TrainConfig& train_cfg, ClassWeighting weighting,
                          const FeatureOptions& options,
                          const nn::EpochCallback& on_epoch) {
  train_cfg.validate();
  const Manifest manifest = read_manifest(sid_dir / "manifest.tsv");
  const auto ref = sid::read_sid_ref(sid_dir / "ref.tsv");
  const Manifest train_entries = select_role(manifest, Role::kTrain);
  const Manifest dev_entries = select_role(manifest, Role::kDev);
  require_nonempty(train_entries, sid_dir, Role::kTrain);
  require_nonempty(dev_entries, sid_dir, Role::kDev);

  std::set<std::string> speaker_set;
  for (const ManifestEntry& e : train_entries) {
    auto it = ref.find(e.file_id);
    if (it == ref.end()) throw Error(ErrorKind::kLabel, e.file_id + ": no reference speaker");
    speaker_set.insert(it->second);
  }
  if (speaker_set.size() < 2) {
    throw Error(ErrorKind::kLabel, "speaker identification needs at least two speakers");
  }
  const std::vector<std::string> speakers(speaker_set.begin(), speaker_set.end());

  const auto train_files = load_features(train_entries, sid_dir, cfg, options);
  const auto dev_files = load_features(dev_entries, sid_dir, cfg, options);
  const NormStats stats = norm_stats_of(train_files);
  const nn::ChunkDataset train_data = sid_dataset(train_files, ref, speakers, cfg, stats);
  const nn::ChunkDataset dev_data = sid_dataset(dev_files, ref, speakers, cfg, stats);

  nn::CnnModel model = nn::build_architecture(Task::kSid, cfg.chunk_frames(), cfg.n_mels,
                                              speakers, train_cfg.seed);
  model.feature_config = cfg;
  model.norm_stats = stats;
  const int n_classes = model.n_classes();
  return nn::train(std::move(model), train_data, dev_data,
                   weighted(train_cfg, weighting, train_data, n_classes), on_epoch);
}

std::map<std::string, SegmentList> infer_sad(const nn::CnnModel& model,
                                             const fs::path& sad_dir, Role role,
                                             const sad::InferOptions& infer,
                                             const FeatureOptions& options) {
  if (model.task != Task::kSad) {
    throw Error(ErrorKind::kTask, "model is a " + std::string(task_name(model.task)) +
                                      " model; SAD inference needs a sad model");
  }
  const Manifest entries = select_role(read_manifest(sad_dir / "manifest.tsv"), role);
  require_nonempty(entries, sad_dir, role);
  std::vector<SegmentList> lists(entries.size());
  FeatureOptions per_file = options;
  per_file.workers = 1;
  parallel_for(entries.size(), options.workers, [&](size_t i) {
    const MelSpectrogram spec =
        features_for(entries[i], sad_dir, model.feature_config, per_file);
    lists[i] = sad::infer_segments(model, spec, entries[i].duration_s, infer);
  });
  std::map<std::string, SegmentList> out;
  for (SegmentList& list : lists) {
    std::string id = list.file_id;
    out.emplace(std::move(id), std::move(list));
  }
  return out;
}

std::map<std::string, std::vector<std::string>> infer_sid(const nn::CnnModel& model,
                                                          const fs::path& sid_dir, Role role,
                                                          sid::VoteMode mode,
                                                          const FeatureOptions& options) {
  if (model.task != Task::kSid) {
    throw Error(ErrorKind::kTask, "model is a " + std::string(task_name(model.task)) +
                                      " model; SID inference needs a sid model");
  }
  const Manifest entries = select_role(read_manifest(sid_dir / "manifest.tsv"), role);
  require_nonempty(entries, sid_dir, role);
  std::vector<std::vector<std::string>> ranked(entries.size());
  FeatureOptions per_file = options;
  per_file.workers = 1;
  parallel_for(entries.size(), options.workers, [&](size_t i) {
    const MelSpectrogram spec =
        features_for(entries[i], sid_dir, model.feature_config, per_file);
    const ChunkBatch batch = sid::sid_chunks(spec, model.feature_config);
    const auto final_list = sid::vote(sid::hypothesize(model, batch), mode);
    for (const sid::VoteEntry& v : final_list) {
      ranked[i].push_back(model.class_labels[v.speaker]);
    }
  });
  std::map<std::string, std::vector<std::string>> out;
  for (size_t i = 0; i < entries.size(); ++i) {
    out.emplace(entries[i].file_id, std::move(ranked[i]));
  }
  return out;
}

std::vector<sid::SidTrial> build_trials(
    const Manifest& manifest, Role role, const std::map<std::string, std::string>& ref,
    const std::map<std::string, std::vector<std::string>>& output, int* missing) {
  std::vector<sid::SidTrial> trials;
  int n_missing = 0;
  for (const ManifestEntry& e : manifest) {
    if (e.role != role) continue;
    auto r = ref.find(e.file_id);
    if (r == ref.end()) {
      throw Error(ErrorKind::kScoring, e.file_id + ": no reference speaker");
    }
    sid::SidTrial trial{e.file_id, r->second, {}, e.duration_s};
    auto o = output.find(e.file_id);
    if (o == output.end()) {
      ++n_missing;
    } else {
      trial.system_topn = o->second;
    }
    trials.push_back(std::move(trial));
  }
  if (missing != nullptr) *missing = n_missing;
  return trials;
}

std::map<std::string, double> train_seconds_per_speaker(
    const Manifest& manifest, const std::map<std::string, std::string>& ref) {
  std::map<std::string, double> out;
  for (const ManifestEntry& e : manifest) {
    if (e.role != Role::kTrain) continue;
    auto r = ref.find(e.file_id);
    if (r != ref.end()) out[r->second] += e.duration_s;
  }
  return out;
}

std::string history_tsv(const std::vector<nn::EpochStats>& history) {
  std::string out = "epoch\ttrain_loss\ttrain_accuracy\tval_loss\tval_accuracy\n";
  for (const nn::EpochStats& e : history) {
    out += std::to_string(e.epoch) + "\t" + format_fixed(e.train_loss, 6) + "\t" +
           format_fixed(e.train_accuracy, 6) + "\t" + format_fixed(e.val_loss, 6) + "\t" +
           format_fixed(e.val_accuracy, 6) + "\n";
  }
  return out;
}

}  // namespace sadsid::pipeline
