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

#include <random>

#include <benchmark/benchmark.h>

#include "sadsid/audio.h"
#include "sadsid/dsp.h"
#include "sadsid/nn/model.h"
#include "sadsid/nn/train.h"
#include "sadsid/sad.h"
#include "sadsid/sid.h"

namespace sadsid {
namespace {

std::vector<double> gaussian(size_t n, uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g;
  std::vector<double> v(n);
  for (double& x : v) x = g(gen);
  return v;
}

// Forward pass of the SAD network over one minibatch.
void BM_SadForward(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  const nn::CnnModel m = nn::build_architecture(Task::kSad, 32, 40, {"S", "NS"}, 1);
  const std::vector<double> x = gaussian(batch * m.input_size(), 2);
  for (auto _ : state) benchmark::DoNotOptimize(nn::forward(m, x, batch));
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_SadForward)->Arg(1)->Arg(64);

// One optimizer step: forward, backward and Adam.
void BM_TrainStep(benchmark::State& state) {
  const bool sid = state.range(0) == 1;
  const int frames = sid ? 128 : 32;
  std::vector<std::string> labels = {"S", "NS"};
  if (sid) {
    labels.clear();
    for (int i = 0; i < 8; ++i) labels.push_back("spk" + std::to_string(i));
  }
  nn::CnnModel m = nn::build_architecture(sid ? Task::kSid : Task::kSad, frames, 40, labels, 1);
  const int batch = 64;
  const std::vector<double> x = gaussian(batch * m.input_size(), 3);
  std::vector<int> y(batch);
  for (int i = 0; i < batch; ++i) y[i] = i % m.n_classes();
  nn::TrainConfig cfg;
  nn::AdamState adam = nn::AdamState::zeros_like(m);
  int64_t t = 0;
  for (auto _ : state) {
    const nn::Gradients g = nn::backward(m, x, batch, y);
    nn::adam_step(m, g, adam, ++t, cfg);
  }
  state.SetItemsProcessed(state.iterations() * batch);
  state.SetLabel(sid ? "sid" : "sad");
}
BENCHMARK(BM_TrainStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

// Log-mel features of one minute of audio.
void BM_MelSpectrogram(benchmark::State& state) {
  AudioBuffer a;
  a.samples = gaussian(60 * 8000, 4);
  for (double& s : a.samples) s *= 0.1;
  const FeatureConfig cfg = state.range(0) == 0 ? FeatureConfig::sad() : FeatureConfig::sid();
  for (auto _ : state) benchmark::DoNotOptimize(mel_spectrogram(a, cfg));
}
BENCHMARK(BM_MelSpectrogram)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

SegmentList alternating(double duration, double mean_len, uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::exponential_distribution<double> len(1.0 / mean_len);
  SegmentList l{"f", {}, duration};
  SpeechLabel label = SpeechLabel::kSpeech;
  for (double t = 0.0; t < duration; label = opposite(label)) {
    const double end = std::min(duration, t + 0.01 + len(gen));
    l.segments.push_back({t, end, label});
    t = end;
  }
  return l;
}

// Collar DCF of one hour of alternating segments.
void BM_ScoreFile(benchmark::State& state) {
  const SegmentList ref = alternating(3600.0, 2.0, 5);
  const SegmentList sys = alternating(3600.0, 1.5, 6);
  for (auto _ : state) benchmark::DoNotOptimize(sad::score_file(ref, sys, 0.25));
  state.SetItemsProcessed(state.iterations() * (ref.segments.size() + sys.segments.size()));
}
BENCHMARK(BM_ScoreFile)->Unit(benchmark::kMicrosecond);

// Voting over a 20 s utterance's chunk lists.
void BM_Vote(benchmark::State& state) {
  Matrix p = Matrix::Zero(117, 8);
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u;
  for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = u(gen);
  const sid::ChunkHypotheses h = sid::top_candidates(p);
  for (auto _ : state) benchmark::DoNotOptimize(sid::vote(h));
}
BENCHMARK(BM_Vote);

}  // namespace
}  // namespace sadsid

BENCHMARK_MAIN();
