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

#include "sadsid/segments.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sadsid/error.h"
#include "sadsid/io.h"

namespace sadsid {

std::string_view speech_label_tag(SpeechLabel label) {
  return label == SpeechLabel::kSpeech ? "S" : "NS";
}

SpeechLabel parse_speech_label(std::string_view tag) {
  if (tag == "S") return SpeechLabel::kSpeech;
  if (tag == "NS") return SpeechLabel::kNonSpeech;
  throw Error(ErrorKind::kFormat,
              "segment label must be S or NS, got '" + std::string(tag) + "'");
}

SpeechLabel SegmentList::label_at(double t) const {
  auto it = std::upper_bound(
      segments.begin(), segments.end(), t,
      [](double value, const Segment& s) { return value < s.start_s; });
  if (it != segments.begin()) {
    --it;
    if (t < it->end_s) return it->label;
  }
  throw Error(ErrorKind::kValidation, file_id + ": no segment covers t=" +
                                          format_fixed(t, 6));
}

void validate_tiling(const SegmentList& list, double tolerance_s) {
  std::ostringstream problems;
  int n_problems = 0;
  auto interval = [](double a, double b) {
    return "[" + format_fixed(a, 3) + "," + format_fixed(b, 3) + ")";
  };
  double cursor = 0.0;
  for (size_t i = 0; i < list.segments.size(); ++i) {
    const Segment& s = list.segments[i];
    if (!(s.start_s < s.end_s)) {
      problems << " empty " << interval(s.start_s, s.end_s) << ";";
      ++n_problems;
    }
    if (s.start_s > cursor + tolerance_s) {
      problems << " gap " << interval(cursor, s.start_s) << ";";
      ++n_problems;
    } else if (s.start_s < cursor - tolerance_s) {
      problems << " overlap " << interval(s.start_s, cursor) << ";";
      ++n_problems;
    }
    cursor = std::max(cursor, s.end_s);
  }
  if (list.segments.empty()) {
    problems << " no segments;";
    ++n_problems;
  } else if (std::abs(cursor - list.file_duration_s) > tolerance_s) {
    problems << " coverage ends at " << format_fixed(cursor, 3)
             << " but file lasts " << format_fixed(list.file_duration_s, 3)
             << ";";
    ++n_problems;
  }
  if (n_problems > 0) {
    throw Error(ErrorKind::kValidation,
                list.file_id + ": segments do not tile the file:" +
                    problems.str());
  }
}

SegmentList merge_adjacent(const SegmentList& list) {
  SegmentList out{list.file_id, {}, list.file_duration_s};
  for (const Segment& s : list.segments) {
    if (!out.segments.empty() && out.segments.back().label == s.label) {
      out.segments.back().end_s = s.end_s;
    } else {
      out.segments.push_back(s);
    }
  }
  return out;
}

void write_segments_tsv(const std::filesystem::path& path,
                        const std::map<std::string, SegmentList>& lists) {
  std::string text;
  for (const auto& [file_id, list] : lists) {
    for (const Segment& s : list.segments) {
      text += file_id;
      text += '\t';
      text += format_fixed(s.start_s, 3);
      text += '\t';
      text += format_fixed(s.end_s, 3);
      text += '\t';
      text += speech_label_tag(s.label);
      text += '\n';
    }
  }
  write_text_file(path, text);
}

std::map<std::string, SegmentList> read_segments_tsv(
    const std::filesystem::path& path) {
  std::map<std::string, SegmentList> lists;
  for (const TextLine& line : read_text_lines(path)) {
    const auto fields = split_tabs(line.text);
    const std::string where =
        path.filename().string() + ":" + std::to_string(line.number);
    if (fields.size() != 4) {
      throw Error(ErrorKind::kFormat,
                  where + ": expected 4 tab-separated fields");
    }
    SegmentList& list = lists[std::string(fields[0])];
    list.file_id = std::string(fields[0]);
    Segment s{parse_double(fields[1], where + " start_s"),
              parse_double(fields[2], where + " end_s"),
              parse_speech_label(fields[3])};
    list.segments.push_back(s);
  }
  for (auto& [file_id, list] : lists) {
    std::stable_sort(list.segments.begin(), list.segments.end(),
                     [](const Segment& a, const Segment& b) {
                       return a.start_s < b.start_s;
                     });
    list.file_duration_s = list.segments.back().end_s;
  }
  return lists;
}

}  // namespace sadsid
