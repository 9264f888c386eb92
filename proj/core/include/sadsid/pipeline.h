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

// Corpus-level training and inference on the layout written by synth_corpus:
// <dir>/manifest.tsv, <dir>/ref.tsv and the audio files it lists.

#ifndef SADSID_PIPELINE_H_
#define SADSID_PIPELINE_H_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sadsid/audio.h"
#include "sadsid/dsp.h"
#include "sadsid/nn/train.h"
#include "sadsid/sad.h"
#include "sadsid/segments.h"
#include "sadsid/sid.h"

namespace sadsid::pipeline {

struct FeatureOptions {
  std::filesystem::path cache_dir;  // empty disables the cache
  int workers = 1;
};

enum class ClassWeighting {
  kNone,
  kInverseFrequency,  // nn::inverse_frequency_weights of the training chunks
};

// Defaults applied before any user override. SAD: 50 ms frames, 320 ms
// chunks, unweighted loss. SID: 25 ms frames, 1.28 s chunks, inverse-frequency
// class weights against the speaker imbalance. Epoch limits are sized for
// the synthetic corpus on one CPU core.
struct TaskDefaults {
  FeatureConfig features;
  nn::TrainConfig train;
  ClassWeighting weighting = ClassWeighting::kNone;
};
TaskDefaults task_defaults(Task task);

struct FileFeatures {
  MelSpectrogram spec;  // un-normalized, rounded to f32 precision
  double duration_s = 0.0;
};

Manifest select_role(const Manifest& manifest, Role role);

// Log-mel features of every entry, in manifest order. Values are always
// rounded to f32 so cached and uncached runs see identical numbers.
std::vector<FileFeatures> load_features(const Manifest& entries,
                                        const std::filesystem::path& base_dir,
                                        const FeatureConfig& cfg,
                                        const FeatureOptions& options);

// Per-band statistics over every frame of `files`, in order.
NormStats norm_stats_of(const std::vector<FileFeatures>& files);

// Chunks of each file on the SAD grid, labelled by aligning `ref`. The
// features are normalized with `stats` first.
nn::ChunkDataset sad_dataset(const std::vector<FileFeatures>& files,
                             const std::map<std::string, SegmentList>& ref,
                             const FeatureConfig& cfg, const NormStats& stats);

// Chunks of each (wrap-padded) utterance, labelled by its speaker's index in
// `speakers`.
nn::ChunkDataset sid_dataset(const std::vector<FileFeatures>& files,
                             const std::map<std::string, std::string>& ref,
                             const std::vector<std::string>& speakers,
                             const FeatureConfig& cfg, const NormStats& stats);

// Train on role=train, validate on role=dev. Explicit train_cfg.class_weights
// take precedence over `weighting`.
nn::TrainResult train_sad(const std::filesystem::path& sad_dir, const FeatureConfig& cfg,
                          const nn::TrainConfig& train_cfg, ClassWeighting weighting,
                          const FeatureOptions& options,
                          const nn::EpochCallback& on_epoch = {});
nn::TrainResult train_sid(const std::filesystem::path& sid_dir, const FeatureConfig& cfg,
                          const nn::TrainConfig& train_cfg, ClassWeighting weighting,
                          const FeatureOptions& options,
                          const nn::EpochCallback& on_epoch = {});

std::map<std::string, SegmentList> infer_sad(const nn::CnnModel& model,
                                             const std::filesystem::path& sad_dir,
                                             Role role, const sad::InferOptions& infer,
                                             const FeatureOptions& options);

// Ranked speaker names (at most 5) per utterance.
std::map<std::string, std::vector<std::string>> infer_sid(
    const nn::CnnModel& model, const std::filesystem::path& sid_dir, Role role,
    sid::VoteMode mode, const FeatureOptions& options);

// One trial per reference utterance with the given role. Utterances without
// system output get an empty list and are counted in *missing.
std::vector<sid::SidTrial> build_trials(
    const Manifest& manifest, Role role, const std::map<std::string, std::string>& ref,
    const std::map<std::string, std::vector<std::string>>& output, int* missing);

// Seconds of role=train audio per speaker.
std::map<std::string, double> train_seconds_per_speaker(
    const Manifest& manifest, const std::map<std::string, std::string>& ref);

// Epoch history as TSV: epoch, train_loss, train_accuracy, val_loss, val_accuracy.
std::string history_tsv(const std::vector<nn::EpochStats>& history);

}  // namespace sadsid::pipeline

#endif  // SADSID_PIPELINE_H_
