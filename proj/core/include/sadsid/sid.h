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

// Closed-set speaker identification: per-chunk top-5 candidates, utterance
// level voting and top-N scoring.

#ifndef SADSID_SID_H_
#define SADSID_SID_H_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sadsid/audio.h"
#include "sadsid/dsp.h"
#include "sadsid/nn/model.h"

namespace sadsid::sid {

inline constexpr int kTopN = 5;

// Repeats rows cyclically until the spectrogram has at least `min_frames`
// rows. Longer inputs are returned unchanged.
MelSpectrogram wrap_pad(const MelSpectrogram& spec, int min_frames);

// Chunks on the configured grid after wrap-padding to one chunk.
ChunkBatch sid_chunks(const MelSpectrogram& spec, const FeatureConfig& cfg);
// Throws ErrorKind::kEmptyInput for audio shorter than one frame.
ChunkBatch sid_chunks(const AudioBuffer& audio, const FeatureConfig& cfg);

struct Candidate {
  int speaker = 0;  // class index
  double posterior = 0.0;

  bool operator==(const Candidate&) const = default;
};

// One list per chunk, best first.
using ChunkHypotheses = std::vector<std::vector<Candidate>>;

// The min(k, n_classes) most probable classes of each row, by descending
// posterior and then ascending index.
ChunkHypotheses top_candidates(const Matrix& posteriors, int k = kTopN);

// Normalizes `batch` with the model's stats and ranks every chunk. Throws
// ErrorKind::kTask for a non-SID model and ErrorKind::kShape on a geometry
// mismatch.
ChunkHypotheses hypothesize(const nn::CnnModel& model, const ChunkBatch& batch,
                            int batch_size = 64);

enum class VoteMode {
  kCountThenPosterior,  // (count, posterior sum, index)
  kCountOnly,           // (count, index)
};

struct VoteEntry {
  int speaker = 0;
  int votes = 0;
  double posterior_sum = 0.0;

  bool operator==(const VoteEntry&) const = default;
};

// Ranks every speaker appearing in any chunk list by appearance count, then
// summed posterior, then ascending index, and keeps the first `top`. The
// posterior sum adds each speaker's values in ascending order so the result
// does not depend on chunk order. Throws ErrorKind::kEmptyInput for no chunks.
std::vector<VoteEntry> vote(const ChunkHypotheses& per_chunk,
                            VoteMode mode = VoteMode::kCountThenPosterior,
                            int top = kTopN);

struct SidTrial {
  std::string utterance_id;
  std::string reference_speaker;
  std::vector<std::string> system_topn;  // ranked, at most 5, empty if missing
  double duration_s = 0.0;
};

// Fraction of trials whose reference is among the first n system speakers.
double score_topn(const std::vector<SidTrial>& trials, int n);
// Accuracies for n = 1..max_n.
std::vector<double> score_topn_vector(const std::vector<SidTrial>& trials,
                                      int max_n = kTopN);

struct DurationBin {
  double lo_s = 0.0;
  double hi_s = 0.0;
  int count = 0;
  int hits = 0;  // reference within the top 5

  double hit_rate() const { return count > 0 ? static_cast<double>(hits) / count : 0.0; }
};

// Bins [0,2), [2,4), ..., [18,20]; durations at or past the top edge go to
// the last bin.
std::vector<DurationBin> duration_bins(const std::vector<SidTrial>& trials,
                                       double width_s = 2.0, double max_s = 20.0);

// bin, hit_rate, miss_rate, count. Empty bins leave both rates blank.
std::string duration_report_tsv(const std::vector<DurationBin>& bins);

struct SpeakerAccuracy {
  std::string speaker;
  double train_seconds = 0.0;
  int trials = 0;
  int top1_hits = 0;
  int top5_hits = 0;
};

// One row per speaker in `train_seconds`, in key order.
std::vector<SpeakerAccuracy> speaker_accuracy(
    const std::vector<SidTrial>& trials,
    const std::map<std::string, double>& train_seconds);

// speaker, train_seconds, trials, top1_accuracy, top5_accuracy.
std::string speaker_report_tsv(const std::vector<SpeakerAccuracy>& rows);

// Reference TSV: `utterance_id<TAB>speaker_id`.
std::map<std::string, std::string> read_sid_ref(const std::filesystem::path& path);
void write_sid_ref(const std::filesystem::path& path,
                   const std::map<std::string, std::string>& ref);

// System TSV: `utterance_id<TAB>spk1<TAB>...<TAB>spk5`, ranked.
std::map<std::string, std::vector<std::string>> read_sid_output(
    const std::filesystem::path& path);
void write_sid_output(const std::filesystem::path& path,
                      const std::map<std::string, std::vector<std::string>>& output);

}  // namespace sadsid::sid

#endif  // SADSID_SID_H_
