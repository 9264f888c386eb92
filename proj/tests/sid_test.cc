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
#include <fstream>
#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "sadsid/error.h"
#include "sadsid/nn/train.h"
#include "support/oracles.h"

namespace sadsid::sid {
namespace {

AudioBuffer noise_audio(double seconds, uint64_t seed) {
  AudioBuffer a;
  a.id = "utt";
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  a.samples.resize(static_cast<size_t>(std::llround(seconds * a.sample_rate_hz)));
  for (double& s : a.samples) s = u(gen);
  return a;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::kIo;
}

// ---- chunking -------------------------------------------------------------

TEST(SidChunks, FourSecondsGives17Chunks) {
  const FeatureConfig cfg = FeatureConfig::sid();
  const ChunkBatch b = sid_chunks(noise_audio(4.0, 1), cfg);
  // (32000 - 200) / 80 + 1 = 398 frames; (398 - 128) / 16 + 1 = 17 chunks.
  EXPECT_EQ(b.n_chunks, 17);
  EXPECT_EQ(b.chunk_frames, 128);
  EXPECT_EQ(b.n_mels, 40);
}

TEST(SidChunks, JustOverOneChunkNeedsNoPadding) {
  const FeatureConfig cfg = FeatureConfig::sid();
  // 127 hops plus one frame = exactly 128 frames.
  const AudioBuffer a = noise_audio((127 * 80 + 200) / 8000.0, 2);
  const MelSpectrogram spec = mel_spectrogram(a, cfg);
  ASSERT_EQ(spec.n_frames(), 128);
  const ChunkBatch b = sid_chunks(spec, cfg);
  ASSERT_EQ(b.n_chunks, 1);
  for (int r = 0; r < 128; ++r) {
    for (int m = 0; m < 40; ++m) ASSERT_EQ(b.at(0, r, m), spec.values(r, m));
  }
}

TEST(SidChunks, ShortUtteranceRepeatsCyclically) {
  const FeatureConfig cfg = FeatureConfig::sid();
  const MelSpectrogram spec = mel_spectrogram(noise_audio(0.5, 3), cfg);
  const int n = spec.n_frames();
  ASSERT_LT(n, 128);
  const ChunkBatch b = sid_chunks(spec, cfg);
  ASSERT_EQ(b.n_chunks, 1);
  for (int r = 0; r < 128; ++r) {
    for (int m = 0; m < 40; ++m) ASSERT_EQ(b.at(0, r, m), spec.values(r % n, m));
  }
}

TEST(SidChunks, PaddingIsIdentityAtOrAboveTheChunkLength) {
  const FeatureConfig cfg = FeatureConfig::sid();
  const MelSpectrogram spec = mel_spectrogram(noise_audio(2.0, 4), cfg);
  EXPECT_EQ(wrap_pad(spec, 128).values, spec.values);
  EXPECT_EQ(wrap_pad(spec, spec.n_frames()).values, spec.values);
}

TEST(SidChunks, NoFramesIsEmptyInput) {
  MelSpectrogram empty;
  empty.values.resize(0, 40);
  EXPECT_EQ(kind_of([&] { sid_chunks(empty, FeatureConfig::sid()); }),
            ErrorKind::kEmptyInput);
}

// ---- candidate lists ------------------------------------------------------

TEST(TopCandidates, FewerClassesThanFiveKeepsAll) {
  Matrix p(1, 3);
  p << 0.2, 0.5, 0.3;
  const ChunkHypotheses h = top_candidates(p);
  ASSERT_EQ(h[0].size(), 3u);
  EXPECT_EQ(h[0][0], (Candidate{1, 0.5}));
  EXPECT_EQ(h[0][1], (Candidate{2, 0.3}));
  EXPECT_EQ(h[0][2], (Candidate{0, 0.2}));
}

TEST(TopCandidates, TiesGoToTheLowerIndex) {
  Matrix p = Matrix::Constant(1, 6, 1.0 / 6.0);
  const ChunkHypotheses h = top_candidates(p);
  ASSERT_EQ(h[0].size(), 5u);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(h[0][i].speaker, i);
}

TEST(TopCandidates, MatchesAFullSortPrefix) {
  std::mt19937_64 gen(5);
  std::uniform_int_distribution<int> level(0, 9);  // coarse values force ties
  for (int trial = 0; trial < 200; ++trial) {
    Matrix p(3, 12);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 12; ++c) p(r, c) = level(gen) / 10.0;
    }
    const ChunkHypotheses h = top_candidates(p);
    for (int r = 0; r < 3; ++r) {
      std::vector<std::pair<double, int>> all;
      for (int c = 0; c < 12; ++c) all.push_back({-p(r, c), c});
      std::sort(all.begin(), all.end());
      ASSERT_EQ(h[r].size(), 5u);
      for (int i = 0; i < 5; ++i) {
        EXPECT_EQ(h[r][i].speaker, all[i].second);
        EXPECT_EQ(h[r][i].posterior, -all[i].first);
      }
    }
  }
}

TEST(Hypothesize, RejectsWrongTaskAndGeometry) {
  const nn::CnnModel sad = nn::build_architecture(Task::kSad, 32, 40, {"S", "NS"}, 1);
  ChunkBatch b;
  b.n_chunks = 1;
  b.chunk_frames = 32;
  b.n_mels = 40;
  b.data.assign(32 * 40, 0.0);
  EXPECT_EQ(kind_of([&] { hypothesize(sad, b); }), ErrorKind::kTask);

  nn::CnnModel sid = nn::build_architecture(Task::kSid, 128, 40, {"a", "b", "c"}, 1);
  EXPECT_EQ(kind_of([&] { hypothesize(sid, b); }), ErrorKind::kShape);
}

TEST(Hypothesize, EqualsTopCandidatesOfNormalizedPosteriors) {
  std::vector<std::string> labels;
  for (int i = 0; i < 8; ++i) labels.push_back("spk" + std::to_string(i));
  nn::CnnModel m = nn::build_architecture(Task::kSid, 128, 40, labels, 3);
  const FeatureConfig cfg = FeatureConfig::sid();
  const ChunkBatch b = sid_chunks(noise_audio(2.0, 6), cfg);
  m.norm_stats = compute_norm_stats(b);
  const ChunkHypotheses h = hypothesize(m, b);
  const ChunkBatch nb = per_feature_normalize(b, m.norm_stats);
  const Matrix p = nn::forward(m, nb.data, nb.n_chunks);
  const ChunkHypotheses want = top_candidates(p);
  ASSERT_EQ(h.size(), want.size());
  for (size_t t = 0; t < h.size(); ++t) {
    ASSERT_EQ(h[t].size(), 5u);
    for (int i = 0; i < 5; ++i) {
      EXPECT_EQ(h[t][i].speaker, want[t][i].speaker);
      EXPECT_NEAR(h[t][i].posterior, want[t][i].posterior, 1e-12);
    }
  }
}

// ---- voting ---------------------------------------------------------------

TEST(Vote, SingleChunkReturnsItsList) {
  const ChunkHypotheses one = {{{4, 0.5}, {2, 0.2}, {7, 0.15}, {0, 0.1}, {1, 0.05}}};
  const auto v = vote(one);
  ASSERT_EQ(v.size(), 5u);
  for (size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(v[i].speaker, one[0][i].speaker);
    EXPECT_EQ(v[i].votes, 1);
    EXPECT_EQ(v[i].posterior_sum, one[0][i].posterior);
  }
}

TEST(Vote, WorkedExample) {
  enum { a, b, c, d, e, f, g, h, x, y };
  const ChunkHypotheses lists = {
      {{a, 0.5}, {b, 0.2}, {c, 0.15}, {d, 0.1}, {e, 0.05}},
      {{a, 0.4}, {c, 0.3}, {f, 0.2}, {g, 0.06}, {h, 0.04}},
      {{a, 0.6}, {f, 0.15}, {b, 0.1}, {x, 0.1}, {y, 0.05}},
  };
  const auto v = vote(lists);
  ASSERT_EQ(v.size(), 5u);
  // a has 3 votes; c (0.45), f (0.35), b (0.30) have 2; d and x tie at 0.1.
  EXPECT_EQ(v[0].speaker, a);
  EXPECT_EQ(v[0].votes, 3);
  EXPECT_EQ(v[1].speaker, c);
  EXPECT_EQ(v[2].speaker, f);
  EXPECT_EQ(v[3].speaker, b);
  EXPECT_EQ(v[4].speaker, d);
  for (int i = 1; i < 4; ++i) EXPECT_EQ(v[i].votes, 2);

  const auto count_only = vote(lists, VoteMode::kCountOnly);
  EXPECT_EQ(count_only[0].speaker, a);
  EXPECT_EQ(count_only[1].speaker, b);
  EXPECT_EQ(count_only[2].speaker, c);
  EXPECT_EQ(count_only[3].speaker, f);
  EXPECT_EQ(count_only[4].speaker, d);
}

TEST(Vote, PosteriorSumBreaksCountTies) {
  const ChunkHypotheses lists = {{{0, 0.5}, {9, 0.7}}, {{0, 0.4}, {9, 0.7}}};
  const auto v = vote(lists);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0].speaker, 9);  // 1.4 beats 0.9
  EXPECT_NEAR(v[0].posterior_sum, 1.4, 1e-15);
  EXPECT_EQ(v[1].speaker, 0);
}

TEST(Vote, AgreesWithTallyOracle) {
  std::mt19937_64 gen(2026);
  for (uint64_t trial = 0; trial < 1000; ++trial) {
    const int n_speakers = std::uniform_int_distribution<int>(1, 20)(gen);
    const int n_chunks = std::uniform_int_distribution<int>(1, 50)(gen);
    const ChunkHypotheses lists = testing::random_hypotheses(trial, n_speakers, n_chunks);
    for (bool count_only : {false, true}) {
      const auto got =
          vote(lists, count_only ? VoteMode::kCountOnly : VoteMode::kCountThenPosterior);
      const auto want = testing::vote_reference(lists, n_speakers, 5, count_only);
      ASSERT_EQ(got, want) << "trial " << trial << " count_only " << count_only;
    }
  }
}

TEST(Vote, InvariantToChunkAndListOrder) {
  std::mt19937_64 gen(9);
  for (uint64_t trial = 0; trial < 100; ++trial) {
    ChunkHypotheses lists = testing::random_hypotheses(trial + 5000, 12, 20);
    const auto base = vote(lists);
    std::shuffle(lists.begin(), lists.end(), gen);
    for (auto& l : lists) std::shuffle(l.begin(), l.end(), gen);
    EXPECT_EQ(vote(lists), base);
  }
}

TEST(Vote, SpeakerInEveryChunkHasMaximalCount) {
  for (uint64_t trial = 0; trial < 200; ++trial) {
    ChunkHypotheses lists = testing::random_hypotheses(trial + 9000, 15, 12);
    for (auto& l : lists) {
      const bool has = std::any_of(l.begin(), l.end(),
                                   [](const Candidate& c) { return c.speaker == 3; });
      if (!has) l.back() = {3, 0.001};
    }
    const auto v = vote(lists);
    EXPECT_EQ(v[0].votes, 12);
    const auto it = std::find_if(v.begin(), v.end(),
                                 [](const VoteEntry& e) { return e.speaker == 3; });
    ASSERT_NE(it, v.end());
    EXPECT_EQ(it->votes, 12);
  }
}

TEST(Vote, EmptyIsEmptyInput) {
  EXPECT_EQ(kind_of([] { vote({}); }), ErrorKind::kEmptyInput);
}

// ---- scoring --------------------------------------------------------------

SidTrial trial(const std::string& ref, std::vector<std::string> sys, double dur = 5.0) {
  return {"u", ref, std::move(sys), dur};
}

TEST(ScoreTopN, AllCorrectIsOne) {
  const std::vector<SidTrial> t = {trial("a", {"a", "b"}), trial("b", {"b"})};
  for (int n = 1; n <= 5; ++n) EXPECT_EQ(score_topn(t, n), 1.0);
}

TEST(ScoreTopN, RankedExample) {
  const std::vector<SidTrial> t = {
      trial("a", {"a", "b", "c", "d", "e"}),
      trial("a", {"b", "a", "c", "d", "e"}),
      trial("a", {"b", "c", "d", "e", "f"}),
      trial("a", {"b", "c", "a", "d", "e"}),
  };
  EXPECT_EQ(score_topn(t, 1), 0.25);
  EXPECT_EQ(score_topn(t, 2), 0.5);
  EXPECT_EQ(score_topn(t, 3), 0.75);
  EXPECT_EQ(score_topn(t, 5), 0.75);
  EXPECT_EQ(score_topn_vector(t), (std::vector<double>{0.25, 0.5, 0.75, 0.75, 0.75}));
}

TEST(ScoreTopN, MissingOutputIsAMiss) {
  const std::vector<SidTrial> t = {trial("a", {}), trial("a", {"a"})};
  EXPECT_EQ(score_topn(t, 5), 0.5);
}

TEST(ScoreTopN, NonDecreasingInN) {
  std::mt19937_64 gen(77);
  std::uniform_int_distribution<int> spk(0, 9);
  for (int round = 0; round < 200; ++round) {
    std::vector<SidTrial> t;
    for (int i = 0; i < 20; ++i) {
      std::vector<std::string> sys;
      while (sys.size() < 5) {
        std::string s = "s" + std::to_string(spk(gen));
        if (std::find(sys.begin(), sys.end(), s) == sys.end()) sys.push_back(s);
      }
      t.push_back(trial("s" + std::to_string(spk(gen)), sys));
    }
    const auto v = score_topn_vector(t);
    for (size_t n = 1; n < v.size(); ++n) EXPECT_GE(v[n], v[n - 1]);
  }
}

TEST(ScoreTopN, BadNIsConfigError) {
  EXPECT_EQ(kind_of([] { score_topn({}, 0); }), ErrorKind::kConfig);
  EXPECT_EQ(score_topn({}, 1), 0.0);
}

TEST(DurationBins, AssignsByFloorAndClampsTheTop) {
  const std::vector<SidTrial> t = {
      trial("a", {"a"}, 1.0),  trial("a", {"b"}, 1.99), trial("a", {"a"}, 2.0),
      trial("a", {"a"}, 19.9), trial("a", {"b"}, 20.0),
  };
  const auto bins = duration_bins(t);
  ASSERT_EQ(bins.size(), 10u);
  EXPECT_EQ(bins[0].count, 2);
  EXPECT_EQ(bins[0].hits, 1);
  EXPECT_EQ(bins[1].count, 1);
  EXPECT_EQ(bins[9].count, 2);
  EXPECT_EQ(bins[9].hits, 1);
  EXPECT_EQ(bins[9].lo_s, 18.0);
  EXPECT_EQ(bins[9].hi_s, 20.0);
  EXPECT_EQ(kind_of([] { duration_bins({}, 0.0, 20.0); }), ErrorKind::kConfig);
}

TEST(DurationBins, ReportLeavesEmptyBinsBlank) {
  const std::vector<SidTrial> t = {trial("a", {"a"}, 1.0), trial("a", {"b"}, 1.5)};
  const std::string tsv = duration_report_tsv(duration_bins(t, 10.0, 20.0));
  EXPECT_EQ(tsv,
            "bin\thit_rate\tmiss_rate\tcount\n"
            "[0,10)\t0.500000\t0.500000\t2\n"
            "[10,20]\t\t\t0\n");
}

TEST(SpeakerAccuracy, CountsTop1AndTop5PerSpeaker) {
  const std::vector<SidTrial> t = {
      trial("a", {"a", "b"}), trial("a", {"b", "a"}), trial("b", {"c"}),
      trial("zz", {"zz"}),  // not a training speaker
  };
  const auto rows = speaker_accuracy(t, {{"a", 60.0}, {"b", 500.0}, {"c", 90.5}});
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].trials, 2);
  EXPECT_EQ(rows[0].top1_hits, 1);
  EXPECT_EQ(rows[0].top5_hits, 2);
  EXPECT_EQ(rows[2].trials, 0);
  EXPECT_EQ(speaker_report_tsv(rows),
            "speaker\ttrain_seconds\ttrials\ttop1_accuracy\ttop5_accuracy\n"
            "a\t60.000\t2\t0.500000\t1.000000\n"
            "b\t500.000\t1\t0.000000\t0.000000\n"
            "c\t90.500\t0\t\t\n");
}

// ---- files ----------------------------------------------------------------

TEST(SidFiles, RefAndOutputRoundTrip) {
  testing::TempDir dir("sidio");
  const std::map<std::string, std::string> ref = {{"u1", "spk00"}, {"u2", "spk07"}};
  write_sid_ref(dir / "ref.tsv", ref);
  EXPECT_EQ(read_sid_ref(dir / "ref.tsv"), ref);

  const std::map<std::string, std::vector<std::string>> out = {
      {"u1", {"spk00", "spk03", "spk01", "spk02", "spk04"}}, {"u2", {"spk07"}}};
  write_sid_output(dir / "out.tsv", out);
  EXPECT_EQ(read_sid_output(dir / "out.tsv"), out);
}

TEST(SidFiles, MalformedRowsAreFormatErrors) {
  testing::TempDir dir("sidbad");
  auto write = [&](const std::string& text) {
    std::ofstream(dir / "x.tsv") << text;
    return dir / "x.tsv";
  };
  EXPECT_EQ(kind_of([&] { read_sid_output(write("u\ta\tb\tc\td\te\tf\n")); }),
            ErrorKind::kFormat);
  EXPECT_EQ(kind_of([&] { read_sid_output(write("u\ta\ta\n")); }), ErrorKind::kFormat);
  EXPECT_EQ(kind_of([&] { read_sid_output(write("u\ta\nu\tb\n")); }), ErrorKind::kFormat);
  EXPECT_EQ(kind_of([&] { read_sid_ref(write("u\n")); }), ErrorKind::kFormat);
  EXPECT_EQ(kind_of([&] { read_sid_ref(write("u\ta\nu\tb\n")); }), ErrorKind::kFormat);
}

}  // namespace
}  // namespace sadsid::sid
