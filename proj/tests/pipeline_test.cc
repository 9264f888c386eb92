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
#include <cmath>
#include <memory>

#include <gtest/gtest.h>

#include "sadsid/error.h"
#include "support/oracles.h"

namespace sadsid::pipeline {
namespace {

namespace fs = std::filesystem;

// One small corpus shared by every test in this file.
class PipelineTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing::TempDir("pipeline");
    SynthSpec spec;
    spec.n_speakers = 3;
    spec.per_speaker_train_seconds = {8.0, 12.0, 10.0};
    spec.utterance_min_s = 0.5;
    spec.utterance_max_s = 4.0;
    spec.sid_dev_per_speaker = 1;
    spec.sid_eval_per_speaker = 2;
    spec.sad_speakers = 3;
    spec.sad_train_files = 2;
    spec.sad_dev_files = 1;
    spec.sad_eval_files = 1;
    spec.sad_file_seconds = 12.0;
    synth_corpus(spec, dir_->path());
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }

  static fs::path sad_dir() { return dir_->path() / "sad"; }
  static fs::path sid_dir() { return dir_->path() / "sid"; }

  static testing::TempDir* dir_;
};

testing::TempDir* PipelineTest::dir_ = nullptr;

TEST_F(PipelineTest, CachedFeaturesEqualFreshOnes) {
  const Manifest m = read_manifest(sad_dir() / "manifest.tsv");
  const FeatureConfig cfg = FeatureConfig::sad();
  testing::TempDir cache("cache");
  const auto fresh = load_features(m, sad_dir(), cfg, {});
  const auto first = load_features(m, sad_dir(), cfg, {cache.path(), 2});
  const auto second = load_features(m, sad_dir(), cfg, {cache.path(), 1});
  ASSERT_EQ(fresh.size(), m.size());
  EXPECT_FALSE(fs::is_empty(cache.path()));
  for (size_t i = 0; i < m.size(); ++i) {
    EXPECT_EQ(fresh[i].spec.id, m[i].file_id);
    EXPECT_EQ(first[i].spec.values, fresh[i].spec.values);
    EXPECT_EQ(second[i].spec.values, fresh[i].spec.values);
    for (double v : fresh[i].spec.values.reshaped()) {
      ASSERT_EQ(static_cast<double>(static_cast<float>(v)), v);
    }
  }
}

TEST_F(PipelineTest, SadDatasetLabelsFollowMajorityOverlap) {
  const Manifest m = select_role(read_manifest(sad_dir() / "manifest.tsv"), Role::kTrain);
  const auto ref = read_segments_tsv(sad_dir() / "ref.tsv");
  const FeatureConfig cfg = FeatureConfig::sad();
  const auto files = load_features(m, sad_dir(), cfg, {});
  const NormStats stats = norm_stats_of(files);
  const nn::ChunkDataset data = sad_dataset(files, ref, cfg, stats);

  size_t i = 0;
  std::vector<double> buf(data.input_size());
  for (const FileFeatures& f : files) {
    const int n = chunk_count(f.spec.n_frames(), 32, 16);
    const SegmentList& list = ref.at(f.spec.id);
    for (int k = 0; k < n; ++k, ++i) {
      ASSERT_LT(i, data.size());
      // Speech seconds inside the shift region, by interval intersection.
      const double lo = k * 0.16;
      const double hi = lo + 0.16;
      double speech = 0.0;
      for (const Segment& s : list.segments) {
        if (s.label != SpeechLabel::kSpeech) continue;
        speech += std::max(0.0, std::min(hi, s.end_s) - std::max(lo, s.start_s));
      }
      const int want = speech >= 0.08 - 1e-9 ? 0 : 1;
      EXPECT_EQ(data.label(i), want) << f.spec.id << " chunk " << k;

      data.copy_input(i, buf.data());
      for (int r = 0; r < 32; r += 7) {
        for (int b = 0; b < 40; b += 9) {
          const double v = (f.spec.values(k * 16 + r, b) - stats.mean[b]) / stats.std[b];
          ASSERT_NEAR(buf[r * 40 + b], v, 1e-12);
        }
      }
    }
  }
  EXPECT_EQ(i, data.size());
}

TEST_F(PipelineTest, SidDatasetUsesSpeakerIndexAndPadsShortUtterances) {
  const Manifest all = read_manifest(sid_dir() / "manifest.tsv");
  const Manifest m = select_role(all, Role::kTrain);
  const auto ref = sid::read_sid_ref(sid_dir() / "ref.tsv");
  const FeatureConfig cfg = FeatureConfig::sid();
  const auto files = load_features(m, sid_dir(), cfg, {});
  const std::vector<std::string> speakers = {"spk00", "spk01", "spk02"};
  const nn::ChunkDataset data = sid_dataset(files, ref, speakers, cfg, norm_stats_of(files));

  size_t expected = 0;
  for (const FileFeatures& f : files) {
    expected += chunk_count(std::max(f.spec.n_frames(), 128), 128, 16);
  }
  ASSERT_EQ(data.size(), expected);
  const auto counts = data.class_counts(3);
  for (long long c : counts) EXPECT_GT(c, 0);

  try {
    sid_dataset(files, ref, {"spk00"}, cfg, norm_stats_of(files));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kLabel);
  }
}

TEST_F(PipelineTest, TrialsCountMissingOutput) {
  const Manifest m = read_manifest(sid_dir() / "manifest.tsv");
  const auto ref = sid::read_sid_ref(sid_dir() / "ref.tsv");
  const Manifest eval = select_role(m, Role::kEval);
  ASSERT_EQ(eval.size(), 6u);
  std::map<std::string, std::vector<std::string>> out;
  out[eval[0].file_id] = {ref.at(eval[0].file_id)};
  int missing = -1;
  const auto trials = build_trials(m, Role::kEval, ref, out, &missing);
  EXPECT_EQ(trials.size(), 6u);
  EXPECT_EQ(missing, 5);
  EXPECT_NEAR(sid::score_topn(trials, 1), 1.0 / 6.0, 1e-15);

  auto partial = ref;
  partial.erase(eval[2].file_id);
  EXPECT_THROW(build_trials(m, Role::kEval, partial, out, nullptr), Error);
}

TEST_F(PipelineTest, TrainSecondsPerSpeaker) {
  const Manifest m = read_manifest(sid_dir() / "manifest.tsv");
  const auto ref = sid::read_sid_ref(sid_dir() / "ref.tsv");
  const auto secs = train_seconds_per_speaker(m, ref);
  ASSERT_EQ(secs.size(), 3u);
  EXPECT_NEAR(secs.at("spk00"), 8.0, 0.08);
  EXPECT_NEAR(secs.at("spk01"), 12.0, 0.12);
  EXPECT_NEAR(secs.at("spk02"), 10.0, 0.10);
}

TEST_F(PipelineTest, SadTrainAndInferProduceTilings) {
  TaskDefaults d = task_defaults(Task::kSad);
  d.train.max_epochs = 1;
  const nn::TrainResult r = train_sad(sad_dir(), d.features, d.train, d.weighting, {});
  ASSERT_EQ(r.history.size(), 1u);
  EXPECT_TRUE(std::isfinite(r.history[0].val_loss));
  const auto out = infer_sad(r.model, sad_dir(), Role::kEval, {}, {});
  const Manifest eval = select_role(read_manifest(sad_dir() / "manifest.tsv"), Role::kEval);
  ASSERT_EQ(out.size(), eval.size());
  for (const ManifestEntry& e : eval) {
    const SegmentList& list = out.at(e.file_id);
    EXPECT_NO_THROW(validate_tiling(list));
    EXPECT_NEAR(list.segments.back().end_s, e.duration_s, 1e-6);
  }
  // A SAD model cannot run SID inference.
  EXPECT_THROW(infer_sid(r.model, sid_dir(), Role::kEval, sid::VoteMode::kCountThenPosterior,
                         {}),
               Error);
}

TEST(History, TsvHasSixDecimals) {
  std::vector<nn::EpochStats> h = {{1, 0.5, 0.75, 0.25, 0.875}, {2, 0.125, 1.0, 0.1, 1.0}};
  EXPECT_EQ(history_tsv(h),
            "epoch\ttrain_loss\ttrain_accuracy\tval_loss\tval_accuracy\n"
            "1\t0.500000\t0.750000\t0.250000\t0.875000\n"
            "2\t0.125000\t1.000000\t0.100000\t1.000000\n");
}

TEST(Defaults, TaskDefaultsDiffer) {
  const TaskDefaults sad = task_defaults(Task::kSad);
  const TaskDefaults sid = task_defaults(Task::kSid);
  EXPECT_EQ(sad.features, FeatureConfig::sad());
  EXPECT_EQ(sid.features, FeatureConfig::sid());
  EXPECT_EQ(sad.weighting, ClassWeighting::kNone);
  EXPECT_EQ(sid.weighting, ClassWeighting::kInverseFrequency);
}

}  // namespace
}  // namespace sadsid::pipeline
