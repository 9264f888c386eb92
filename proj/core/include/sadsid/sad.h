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

// Speech activity detection on the 160 ms shift-region grid, and DCF scoring.

#ifndef SADSID_SAD_H_
#define SADSID_SAD_H_

#include <map>
#include <span>
#include <string>
#include <vector>

#include "sadsid/audio.h"
#include "sadsid/dsp.h"
#include "sadsid/nn/model.h"
#include "sadsid/segments.h"

namespace sadsid::sad {

inline constexpr double kDefaultCollarS = 0.250;
inline constexpr double kShortSegmentS = 0.200;

// Label of shift region k = [k * shift_s, (k + 1) * shift_s) for k < n_chunks:
// the label covering most of the region; an exact tie (within 1e-9 s) goes to
// speech. Throws ErrorKind::kValidation if `ref` does not tile its file.
std::vector<int> align_labels(const SegmentList& ref, int n_chunks, double shift_s);

// Region k gets region_labels[k]; the tail past the last region inherits the
// last label, and no regions at all means a single non-speech segment. Equal
// neighbours are merged, so the result alternates and tiles [0, duration_s].
SegmentList segments_from_region_labels(std::span<const int> region_labels,
                                        double shift_s, double duration_s,
                                        std::string file_id);

// Relabels the shortest segment below min_duration_s (earliest first on
// ties) and re-merges, until every segment is long enough or one remains.
SegmentList apply_min_duration(const SegmentList& list, double min_duration_s);

struct InferOptions {
  // Average each region's posterior over the two chunks covering it instead
  // of using the chunk that starts there.
  bool average_posteriors = false;
  double min_duration_s = 0.0;  // 0 disables the post-filter
  int batch_size = 64;
};

// Argmax decision per region from chunk posteriors [n_chunks x 2].
std::vector<int> region_decisions(const Matrix& posteriors, bool average_posteriors);

// Un-normalized log-mel features of one file -> segments. `features` must
// come from model.feature_config; the model's norm stats are applied here.
SegmentList infer_segments(const nn::CnnModel& model, const MelSpectrogram& features,
                           double duration_s, const InferOptions& options = {});

// Full pipeline from audio. Throws ErrorKind::kTask for a non-SAD model and
// ErrorKind::kEmptyInput for audio shorter than one frame.
SegmentList infer_segments(const nn::CnnModel& model, const AudioBuffer& audio,
                           const InferOptions& options = {});

struct DcfTotals {
  double scored_speech_s = 0.0;
  double scored_nonspeech_s = 0.0;
  double fn_s = 0.0;  // scored reference speech labelled non-speech
  double fp_s = 0.0;  // scored reference non-speech labelled speech

  double p_fn() const { return scored_speech_s > 0.0 ? fn_s / scored_speech_s : 0.0; }
  double p_fp() const {
    return scored_nonspeech_s > 0.0 ? fp_s / scored_nonspeech_s : 0.0;
  }
  double dcf() const { return 0.75 * p_fn() + 0.25 * p_fp(); }
};

struct FileDcf {
  std::string file_id;
  DcfTotals totals;
  int short_segment_count = 0;
};

struct DcfReport {
  DcfTotals pooled;
  std::vector<FileDcf> per_file;  // sorted by file id

  double p_fn() const { return pooled.p_fn(); }
  double p_fp() const { return pooled.p_fp(); }
  double dcf() const { return pooled.dcf(); }
};

// Exact interval scoring of one file. Time within collar_s of an interior
// reference label change is not scored.
DcfTotals score_file(const SegmentList& ref, const SegmentList& sys, double collar_s);

// Scores every system file against its reference and pools times across
// files. Throws ErrorKind::kScoring naming the file when a reference is
// missing, a list does not tile its file, or durations differ by more than
// 1.5 ms.
DcfReport score_dcf(const std::map<std::string, SegmentList>& ref,
                    const std::map<std::string, SegmentList>& sys,
                    double collar_s = kDefaultCollarS, int workers = 1);

// Reference segments strictly shorter than threshold_s.
int short_segment_count(const SegmentList& ref, double threshold_s = kShortSegmentS);

// Header plus one row per file:
// file_id, dcf, short_segment_count, p_fn, p_fp, scored_speech_s, scored_nonspeech_s.
std::string sad_report_tsv(const DcfReport& report);

}  // namespace sadsid::sad

#endif  // SADSID_SAD_H_
