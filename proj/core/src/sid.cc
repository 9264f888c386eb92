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

#include "sadsid/sid.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sadsid/error.h"
#include "sadsid/io.h"
#include "sadsid/nn/train.h"

namespace sadsid::sid {

MelSpectrogram wrap_pad(const MelSpectrogram& spec, int min_frames) {
  if (spec.n_frames() >= min_frames || spec.n_frames() == 0) return spec;
  MelSpectrogram out = spec;
  out.values.resize(min_frames, spec.n_mels());
  for (int r = 0; r < min_frames; ++r) {
    out.values.row(r) = spec.values.row(r % spec.n_frames());
  }
  return out;
}

ChunkBatch sid_chunks(const MelSpectrogram& spec, const FeatureConfig& cfg) {
  if (spec.n_frames() == 0) {
    throw Error(ErrorKind::kEmptyInput, spec.id + ": no spectrogram frames");
  }
  return chunk(wrap_pad(spec, cfg.chunk_frames()), cfg);
}

ChunkBatch sid_chunks(const AudioBuffer& audio, const FeatureConfig& cfg) {
  return sid_chunks(mel_spectrogram(audio, cfg), cfg);
}

ChunkHypotheses top_candidates(const Matrix& posteriors, int k) {
  const auto n_classes = static_cast<int>(posteriors.cols());
  const int keep = std::min(k, n_classes);
  ChunkHypotheses out(posteriors.rows());
  std::vector<int> order(n_classes);
  for (Eigen::Index t = 0; t < posteriors.rows(); ++t) {
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + keep, order.end(), [&](int a, int b) {
      const double pa = posteriors(t, a);
      const double pb = posteriors(t, b);
      return pa != pb ? pa > pb : a < b;
    });
    out[t].reserve(keep);
    for (int i = 0; i < keep; ++i) out[t].push_back({order[i], posteriors(t, order[i])});
  }
  return out;
}

ChunkHypotheses hypothesize(const nn::CnnModel& model, const ChunkBatch& batch,
                            int batch_size) {
  if (model.task != Task::kSid) {
    throw Error(ErrorKind::kTask, "model is a " + std::string(task_name(model.task)) +
                                      " model; SID inference needs a sid model");
  }
  if (batch.chunk_frames != model.input_frames || batch.n_mels != model.input_mels) {
    throw Error(ErrorKind::kShape,
                "chunk geometry " + std::to_string(batch.chunk_frames) + "x" +
                    std::to_string(batch.n_mels) + " does not match model input " +
                    std::to_string(model.input_frames) + "x" +
                    std::to_string(model.input_mels));
  }
  const ChunkBatch normalized = per_feature_normalize(batch, model.norm_stats);
  const Matrix posteriors =
      nn::predict(model, normalized.data, normalized.n_chunks, batch_size, 1);
  return top_candidates(posteriors);
}

std::vector<VoteEntry> vote(const ChunkHypotheses& per_chunk, VoteMode mode, int top) {
  if (per_chunk.empty()) {
    throw Error(ErrorKind::kEmptyInput, "vote needs at least one chunk hypothesis list");
  }
  std::map<int, std::vector<double>> bag;
  for (const auto& list : per_chunk) {
    for (const Candidate& c : list) bag[c.speaker].push_back(c.posterior);
  }
  std::vector<VoteEntry> entries;
  entries.reserve(bag.size());
  for (auto& [speaker, values] : bag) {
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    entries.push_back({speaker, static_cast<int>(values.size()), sum});
  }
  std::sort(entries.begin(), entries.end(), [mode](const VoteEntry& a, const VoteEntry& b) {
    if (a.votes != b.votes) return a.votes > b.votes;
    if (mode == VoteMode::kCountThenPosterior && a.posterior_sum != b.posterior_sum) {
      return a.posterior_sum > b.posterior_sum;
    }
    return a.speaker < b.speaker;
  });
  if (entries.size() > static_cast<size_t>(top)) entries.resize(top);
  return entries;
}

double score_topn(const std::vector<SidTrial>& trials, int n) {
  if (n < 1) throw Error(ErrorKind::kConfig, "top-N needs n >= 1");
  if (trials.empty()) return 0.0;
  int hits = 0;
  for (const SidTrial& t : trials) {
    const auto end = t.system_topn.begin() +
                     std::min<ptrdiff_t>(n, static_cast<ptrdiff_t>(t.system_topn.size()));
    if (std::find(t.system_topn.begin(), end, t.reference_speaker) != end) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(trials.size());
}

std::vector<double> score_topn_vector(const std::vector<SidTrial>& trials, int max_n) {
  std::vector<double> out;
  for (int n = 1; n <= max_n; ++n) out.push_back(score_topn(trials, n));
  return out;
}

std::vector<DurationBin> duration_bins(const std::vector<SidTrial>& trials, double width_s,
                                       double max_s) {
  if (width_s <= 0.0 || max_s < width_s) {
    throw Error(ErrorKind::kConfig, "duration bins need 0 < width <= max");
  }
  const auto n_bins = static_cast<int>(std::ceil(max_s / width_s - 1e-9));
  std::vector<DurationBin> bins(n_bins);
  for (int b = 0; b < n_bins; ++b) {
    bins[b].lo_s = b * width_s;
    bins[b].hi_s = std::min(max_s, (b + 1) * width_s);
  }
  for (const SidTrial& t : trials) {
    const int b = std::clamp(static_cast<int>(std::floor(t.duration_s / width_s)), 0,
                             n_bins - 1);
    ++bins[b].count;
    const auto end = t.system_topn.begin() +
                     std::min<ptrdiff_t>(kTopN, static_cast<ptrdiff_t>(t.system_topn.size()));
    if (std::find(t.system_topn.begin(), end, t.reference_speaker) != end) ++bins[b].hits;
  }
  return bins;
}

std::string duration_report_tsv(const std::vector<DurationBin>& bins) {
  std::string out = "bin\thit_rate\tmiss_rate\tcount\n";
  for (size_t b = 0; b < bins.size(); ++b) {
    const DurationBin& bin = bins[b];
    const bool last = b + 1 == bins.size();
    out += "[" + format_fixed(bin.lo_s, 0) + "," + format_fixed(bin.hi_s, 0) +
           (last ? "]" : ")") + "\t";
    if (bin.count > 0) {
      out += format_fixed(bin.hit_rate(), 6) + "\t" + format_fixed(1.0 - bin.hit_rate(), 6);
    } else {
      out += "\t";
    }
    out += "\t" + std::to_string(bin.count) + "\n";
  }
  return out;
}

std::vector<SpeakerAccuracy> speaker_accuracy(
    const std::vector<SidTrial>& trials,
    const std::map<std::string, double>& train_seconds) {
  std::map<std::string, SpeakerAccuracy> rows;
  for (const auto& [speaker, seconds] : train_seconds) {
    rows[speaker] = {speaker, seconds, 0, 0, 0};
  }
  for (const SidTrial& t : trials) {
    auto it = rows.find(t.reference_speaker);
    if (it == rows.end()) continue;
    SpeakerAccuracy& row = it->second;
    ++row.trials;
    const auto& sys = t.system_topn;
    if (!sys.empty() && sys.front() == t.reference_speaker) ++row.top1_hits;
    const auto end =
        sys.begin() + std::min<ptrdiff_t>(kTopN, static_cast<ptrdiff_t>(sys.size()));
    if (std::find(sys.begin(), end, t.reference_speaker) != end) ++row.top5_hits;
  }
  std::vector<SpeakerAccuracy> out;
  for (auto& [speaker, row] : rows) out.push_back(row);
  return out;
}

std::string speaker_report_tsv(const std::vector<SpeakerAccuracy>& rows) {
  std::string out = "speaker\ttrain_seconds\ttrials\ttop1_accuracy\ttop5_accuracy\n";
  for (const SpeakerAccuracy& r : rows) {
    out += r.speaker + "\t" + format_fixed(r.train_seconds, 3) + "\t" +
           std::to_string(r.trials) + "\t";
    if (r.trials > 0) {
      out += format_fixed(static_cast<double>(r.top1_hits) / r.trials, 6) + "\t" +
             format_fixed(static_cast<double>(r.top5_hits) / r.trials, 6);
    } else {
      out += "\t";
    }
    out += "\n";
  }
  return out;
}

std::map<std::string, std::string> read_sid_ref(const std::filesystem::path& path) {
  std::map<std::string, std::string> ref;
  for (const TextLine& line : read_text_lines(path)) {
    const auto fields = split_tabs(line.text);
    const std::string where = path.filename().string() + ":" + std::to_string(line.number);
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      throw Error(ErrorKind::kFormat, where + ": expected utterance_id<TAB>speaker_id");
    }
    if (!ref.emplace(std::string(fields[0]), std::string(fields[1])).second) {
      throw Error(ErrorKind::kFormat, where + ": duplicate utterance " +
                                          std::string(fields[0]));
    }
  }
  return ref;
}

void write_sid_ref(const std::filesystem::path& path,
                   const std::map<std::string, std::string>& ref) {
  std::string text;
  for (const auto& [utt, speaker] : ref) text += utt + '\t' + speaker + '\n';
  write_text_file(path, text);
}

std::map<std::string, std::vector<std::string>> read_sid_output(
    const std::filesystem::path& path) {
  std::map<std::string, std::vector<std::string>> out;
  for (const TextLine& line : read_text_lines(path)) {
    const auto fields = split_tabs(line.text);
    const std::string where = path.filename().string() + ":" + std::to_string(line.number);
    if (fields.size() < 2 || fields.size() > 1 + kTopN || fields[0].empty()) {
      throw Error(ErrorKind::kFormat,
                  where + ": expected utterance_id followed by 1 to 5 ranked speakers");
    }
    std::vector<std::string> ranked;
    for (size_t i = 1; i < fields.size(); ++i) {
      std::string spk(fields[i]);
      if (spk.empty() || std::find(ranked.begin(), ranked.end(), spk) != ranked.end()) {
        throw Error(ErrorKind::kFormat, where + ": empty or repeated speaker");
      }
      ranked.push_back(std::move(spk));
    }
    if (!out.emplace(std::string(fields[0]), std::move(ranked)).second) {
      throw Error(ErrorKind::kFormat, where + ": duplicate utterance " +
                                          std::string(fields[0]));
    }
  }
  return out;
}

void write_sid_output(const std::filesystem::path& path,
                      const std::map<std::string, std::vector<std::string>>& output) {
  std::string text;
  for (const auto& [utt, ranked] : output) {
    text += utt;
    for (const auto& spk : ranked) text += '\t' + spk;
    text += '\n';
  }
  write_text_file(path, text);
}

}  // namespace sadsid::sid
