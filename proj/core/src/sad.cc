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

#include "sadsid/sad.h"

#include <algorithm>
#include <cmath>

#include "sadsid/error.h"
#include "sadsid/io.h"
#include "sadsid/nn/train.h"
#include "sadsid/parallel.h"

namespace sadsid::sad {
namespace {

constexpr double kTieTolerance = 1e-9;
constexpr double kDurationTolerance = 1.5e-3;

// Label of the last segment starting at or before t; clamps outside the list.
SpeechLabel label_near(const SegmentList& list, double t) {
  const auto& segs = list.segments;
  auto it = std::upper_bound(segs.begin(), segs.end(), t,
                             [](double v, const Segment& s) { return v < s.start_s; });
  if (it == segs.begin()) return segs.front().label;
  return std::prev(it)->label;
}

}  // namespace

std::vector<int> align_labels(const SegmentList& ref, int n_chunks, double shift_s) {
  validate_tiling(ref);
  std::vector<int> labels(std::max(n_chunks, 0), static_cast<int>(SpeechLabel::kSpeech));
  size_t seg = 0;
  for (int k = 0; k < n_chunks; ++k) {
    const double lo = k * shift_s;
    const double hi = (k + 1) * shift_s;
    while (seg < ref.segments.size() && ref.segments[seg].end_s <= lo) ++seg;
    double speech = 0.0;
    double nonspeech = 0.0;
    for (size_t s = seg; s < ref.segments.size() && ref.segments[s].start_s < hi; ++s) {
      const double overlap =
          std::min(hi, ref.segments[s].end_s) - std::max(lo, ref.segments[s].start_s);
      if (overlap <= 0.0) continue;
      (ref.segments[s].label == SpeechLabel::kSpeech ? speech : nonspeech) += overlap;
    }
    labels[k] = static_cast<int>(nonspeech > speech + kTieTolerance ? SpeechLabel::kNonSpeech
                                                                    : SpeechLabel::kSpeech);
  }
  return labels;
}

SegmentList segments_from_region_labels(std::span<const int> region_labels,
                                        double shift_s, double duration_s,
                                        std::string file_id) {
  SegmentList out;
  out.file_id = std::move(file_id);
  out.file_duration_s = duration_s;
  if (region_labels.empty()) {
    out.segments.push_back({0.0, duration_s, SpeechLabel::kNonSpeech});
    return out;
  }
  for (size_t k = 0; k < region_labels.size(); ++k) {
    const int label = region_labels[k];
    if (label != 0 && label != 1) {
      throw Error(ErrorKind::kLabel, "region label " + std::to_string(label) +
                                         " is neither speech (0) nor non-speech (1)");
    }
    const double start = static_cast<double>(k) * shift_s;
    const bool last = k + 1 == region_labels.size();
    const double end = last ? duration_s : static_cast<double>(k + 1) * shift_s;
    const auto tag = static_cast<SpeechLabel>(label);
    if (!out.segments.empty() && out.segments.back().label == tag) {
      out.segments.back().end_s = end;
    } else {
      out.segments.push_back({start, end, tag});
    }
  }
  return out;
}

SegmentList apply_min_duration(const SegmentList& list, double min_duration_s) {
  SegmentList out = merge_adjacent(list);
  if (min_duration_s <= 0.0) return out;
  while (out.segments.size() > 1) {
    size_t shortest = out.segments.size();
    for (size_t i = 0; i < out.segments.size(); ++i) {
      const double d = out.segments[i].duration();
      if (d < min_duration_s &&
          (shortest == out.segments.size() || d < out.segments[shortest].duration())) {
        shortest = i;
      }
    }
    if (shortest == out.segments.size()) break;
    out.segments[shortest].label = opposite(out.segments[shortest].label);
    out = merge_adjacent(out);
  }
  return out;
}

std::vector<int> region_decisions(const Matrix& posteriors, bool average_posteriors) {
  const auto n = static_cast<int>(posteriors.rows());
  std::vector<int> decisions(n);
  for (int k = 0; k < n; ++k) {
    double speech = posteriors(k, 0);
    double nonspeech = posteriors(k, 1);
    if (average_posteriors && k > 0) {
      speech = 0.5 * (speech + posteriors(k - 1, 0));
      nonspeech = 0.5 * (nonspeech + posteriors(k - 1, 1));
    }
    // argmax with ties to the lower index (speech)
    decisions[k] = nonspeech > speech ? 1 : 0;
  }
  return decisions;
}

SegmentList infer_segments(const nn::CnnModel& model, const MelSpectrogram& features,
                           double duration_s, const InferOptions& options) {
  if (model.task != Task::kSad) {
    throw Error(ErrorKind::kTask, "model is a " + std::string(task_name(model.task)) +
                                      " model; SAD inference needs a sad model");
  }
  MelSpectrogram normalized = features;
  normalize_in_place(normalized.values, model.norm_stats);
  const ChunkBatch batch = chunk(normalized, model.feature_config);
  std::vector<int> decisions;
  if (batch.n_chunks > 0) {
    const Matrix posteriors =
        nn::predict(model, batch.data, batch.n_chunks, options.batch_size, 1);
    decisions = region_decisions(posteriors, options.average_posteriors);
  }
  SegmentList out = segments_from_region_labels(decisions, batch.shift_s, duration_s,
                                                features.id);
  return apply_min_duration(out, options.min_duration_s);
}

SegmentList infer_segments(const nn::CnnModel& model, const AudioBuffer& audio,
                           const InferOptions& options) {
  if (model.task != Task::kSad) {
    throw Error(ErrorKind::kTask, "model is a " + std::string(task_name(model.task)) +
                                      " model; SAD inference needs a sad model");
  }
  const MelSpectrogram features = mel_spectrogram(audio, model.feature_config);
  return infer_segments(model, features, audio.duration_seconds(), options);
}

DcfTotals score_file(const SegmentList& ref, const SegmentList& sys, double collar_s) {
  DcfTotals totals;
  const double duration = ref.file_duration_s;
  if (ref.segments.empty() || sys.segments.empty() || duration <= 0.0) return totals;

  const SegmentList merged = merge_adjacent(ref);
  std::vector<double> transitions;
  for (size_t i = 1; i < merged.segments.size(); ++i) {
    transitions.push_back(merged.segments[i].start_s);
  }

  std::vector<double> cuts = {0.0, duration};
  auto add_cut = [&](double t) {
    if (t > 0.0 && t < duration) cuts.push_back(t);
  };
  for (const Segment& s : ref.segments) add_cut(s.start_s);
  for (const Segment& s : sys.segments) add_cut(s.start_s);
  for (double t : transitions) {
    add_cut(t - collar_s);
    add_cut(t + collar_s);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  for (size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i];
    const double hi = cuts[i + 1];
    const double mid = 0.5 * (lo + hi);
    auto near = std::lower_bound(transitions.begin(), transitions.end(), mid);
    bool excluded = false;
    if (near != transitions.end() && *near - mid < collar_s) excluded = true;
    if (near != transitions.begin() && mid - *std::prev(near) < collar_s) excluded = true;
    if (excluded) continue;
    const double len = hi - lo;
    const bool ref_speech = label_near(ref, mid) == SpeechLabel::kSpeech;
    const bool sys_speech = label_near(sys, mid) == SpeechLabel::kSpeech;
    if (ref_speech) {
      totals.scored_speech_s += len;
      if (!sys_speech) totals.fn_s += len;
    } else {
      totals.scored_nonspeech_s += len;
      if (sys_speech) totals.fp_s += len;
    }
  }
  return totals;
}

DcfReport score_dcf(const std::map<std::string, SegmentList>& ref,
                    const std::map<std::string, SegmentList>& sys, double collar_s,
                    int workers) {
  if (collar_s < 0.0) throw Error(ErrorKind::kConfig, "collar must be non-negative");
  std::vector<const SegmentList*> sys_lists;
  std::vector<const SegmentList*> ref_lists;
  for (const auto& [id, list] : sys) {
    auto it = ref.find(id);
    if (it == ref.end()) {
      throw Error(ErrorKind::kScoring, id + ": no reference segments for this file");
    }
    sys_lists.push_back(&list);
    ref_lists.push_back(&it->second);
  }

  DcfReport report;
  report.per_file.resize(sys_lists.size());
  parallel_for(sys_lists.size(), workers, [&](size_t i) {
    const SegmentList& r = *ref_lists[i];
    const SegmentList& s = *sys_lists[i];
    const std::string& id = s.file_id;
    try {
      validate_tiling(r);
    } catch (const Error& e) {
      throw Error(ErrorKind::kScoring, id + ": reference: " + e.what());
    }
    if (std::abs(s.file_duration_s - r.file_duration_s) > kDurationTolerance) {
      throw Error(ErrorKind::kScoring,
                  id + ": system covers " + format_fixed(s.file_duration_s, 3) +
                      " s but the reference covers " + format_fixed(r.file_duration_s, 3) +
                      " s");
    }
    try {
      validate_tiling(s);
    } catch (const Error& e) {
      throw Error(ErrorKind::kScoring, id + ": system: " + e.what());
    }
    FileDcf& row = report.per_file[i];
    row.file_id = id;
    row.totals = score_file(r, s, collar_s);
    row.short_segment_count = short_segment_count(r);
  });

  for (const FileDcf& row : report.per_file) {
    report.pooled.scored_speech_s += row.totals.scored_speech_s;
    report.pooled.scored_nonspeech_s += row.totals.scored_nonspeech_s;
    report.pooled.fn_s += row.totals.fn_s;
    report.pooled.fp_s += row.totals.fp_s;
  }
  return report;
}

int short_segment_count(const SegmentList& ref, double threshold_s) {
  int count = 0;
  for (const Segment& s : ref.segments) {
    // Tolerance keeps a 0.200 s segment parsed from text out of the count.
    if (s.duration() < threshold_s - kTieTolerance) ++count;
  }
  return count;
}

std::string sad_report_tsv(const DcfReport& report) {
  std::string out =
      "file_id\tdcf\tshort_segment_count\tp_fn\tp_fp\tscored_speech_s\tscored_nonspeech_s\n";
  for (const FileDcf& row : report.per_file) {
    out += row.file_id + "\t" + format_fixed(row.totals.dcf(), 6) + "\t" +
           std::to_string(row.short_segment_count) + "\t" +
           format_fixed(row.totals.p_fn(), 6) + "\t" + format_fixed(row.totals.p_fp(), 6) +
           "\t" + format_fixed(row.totals.scored_speech_s, 3) + "\t" +
           format_fixed(row.totals.scored_nonspeech_s, 3) + "\n";
  }
  return out;
}

}  // namespace sadsid::sad
