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

#ifndef SADSID_SEGMENTS_H_
#define SADSID_SEGMENTS_H_

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace sadsid {

// Class indices of the SAD network: speech is 0, non-speech is 1.
enum class SpeechLabel : int { kSpeech = 0, kNonSpeech = 1 };

std::string_view speech_label_tag(SpeechLabel label);  // "S" / "NS"
SpeechLabel parse_speech_label(std::string_view tag);

inline SpeechLabel opposite(SpeechLabel label) {
  return label == SpeechLabel::kSpeech ? SpeechLabel::kNonSpeech
                                       : SpeechLabel::kSpeech;
}

struct Segment {
  double start_s = 0.0;
  double end_s = 0.0;
  SpeechLabel label = SpeechLabel::kSpeech;

  double duration() const { return end_s - start_s; }
  bool operator==(const Segment&) const = default;
};

struct SegmentList {
  std::string file_id;
  std::vector<Segment> segments;
  double file_duration_s = 0.0;

  // Label at time t (segment containing t, with right-open intervals). The
  // list must be sorted; t outside every segment throws.
  SpeechLabel label_at(double t) const;
};

// Throws ErrorKind::kValidation listing every unsorted, empty, overlapping
// or gapped interval, or a coverage mismatch with [0, file_duration_s].
void validate_tiling(const SegmentList& list, double tolerance_s = 1e-6);

// Joins adjacent segments with equal labels into maximal segments.
SegmentList merge_adjacent(const SegmentList& list);

// Segment TSV: `file_id<TAB>start_s<TAB>end_s<TAB>label`, label S or NS,
// times with three fractional digits, sorted by file then start. Reading
// groups rows by file id; file_duration_s is the last segment end.
void write_segments_tsv(const std::filesystem::path& path,
                        const std::map<std::string, SegmentList>& lists);
std::map<std::string, SegmentList> read_segments_tsv(
    const std::filesystem::path& path);

}  // namespace sadsid

#endif  // SADSID_SEGMENTS_H_
