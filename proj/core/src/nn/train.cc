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

#include "sadsid/nn/train.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "sadsid/error.h"
#include "sadsid/parallel.h"
#include "sadsid/rng.h"

namespace sadsid::nn {
namespace {

int argmax_row(const double* row, int n) {
  return static_cast<int>(std::max_element(row, row + n) - row);
}

}  // namespace

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorKind::kConfig, "train config: " + what);
  };
  if (!(learning_rate > 0.0)) fail("learning_rate must be > 0");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0)) fail("adam_beta1 must be in (0, 1)");
  if (!(adam_beta2 > 0.0 && adam_beta2 < 1.0)) fail("adam_beta2 must be in (0, 1)");
  if (!(adam_epsilon > 0.0)) fail("adam_epsilon must be > 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (max_epochs < 1) fail("max_epochs must be >= 1");
  if (early_stop_patience < 1) fail("early_stop_patience must be >= 1");
  if (grad_shards < 1) fail("grad_shards must be >= 1");
}

AdamState AdamState::zeros_like(const CnnModel& model) {
  AdamState s;
  for (const auto& p : model.parameters()) {
    s.m.emplace_back(p.size(), 0.0);
    s.v.emplace_back(p.size(), 0.0);
  }
  return s;
}

void adam_step(CnnModel& model, const Gradients& grads, AdamState& state,
               int64_t t, const TrainConfig& cfg) {
  auto params = model.parameters();
  if (grads.tensors.size() != params.size() || state.m.size() != params.size()) {
    throw Error(ErrorKind::kShape, "adam: gradient / state shapes differ from model");
  }
  const double b1 = cfg.adam_beta1;
  const double b2 = cfg.adam_beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t));
  for (size_t i = 0; i < params.size(); ++i) {
    if (grads.tensors[i].size() != params[i].size() || state.m[i].size() != params[i].size()) {
      throw Error(ErrorKind::kShape, "adam: tensor " + std::to_string(i) + " size differs");
    }
  }
  for (size_t i = 0; i < params.size(); ++i) {
    double* theta = params[i].data();
    const double* g = grads.tensors[i].data();
    double* m = state.m[i].data();
    double* v = state.v[i].data();
    for (size_t j = 0; j < params[i].size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      theta[j] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_epsilon);
    }
  }
}

ChunkDataset::ChunkDataset(int chunk_frames, int n_mels)
    : chunk_frames_(chunk_frames), n_mels_(n_mels) {}

int ChunkDataset::add_source(Matrix spectrogram) {
  if (spectrogram.cols() != n_mels_) {
    throw Error(ErrorKind::kShape, "dataset: source has " +
                                       std::to_string(spectrogram.cols()) +
                                       " bands, expected " + std::to_string(n_mels_));
  }
  sources_.push_back(std::move(spectrogram));
  return static_cast<int>(sources_.size()) - 1;
}

void ChunkDataset::add_chunk(int source, int start_row, int label) {
  if (source < 0 || source >= static_cast<int>(sources_.size()) || start_row < 0 ||
      start_row + chunk_frames_ > sources_[source].rows()) {
    throw Error(ErrorKind::kShape, "dataset: chunk outside its source");
  }
  chunks_.push_back({source, start_row, label});
}

void ChunkDataset::add_batch(const ChunkBatch& batch, std::span<const int> labels) {
  if (batch.chunk_frames != chunk_frames_ || batch.n_mels != n_mels_ ||
      labels.size() != static_cast<size_t>(batch.n_chunks)) {
    throw Error(ErrorKind::kShape, "dataset: batch geometry or label count mismatch");
  }
  for (int k = 0; k < batch.n_chunks; ++k) {
    Matrix m(chunk_frames_, n_mels_);
    std::memcpy(m.data(), batch.chunk(k).data(), batch.chunk_size() * sizeof(double));
    add_chunk(add_source(std::move(m)), 0, labels[k]);
  }
}

void ChunkDataset::copy_input(size_t i, double* dst) const {
  const ChunkRef& c = chunks_[i];
  const double* src = sources_[c.source].data() + static_cast<size_t>(c.start_row) * n_mels_;
  std::memcpy(dst, src, input_size() * sizeof(double));
}

std::vector<long long> ChunkDataset::class_counts(int n_classes) const {
  std::vector<long long> counts(n_classes, 0);
  for (const ChunkRef& c : chunks_) {
    if (c.label >= 0 && c.label < n_classes) ++counts[c.label];
  }
  return counts;
}

std::vector<double> inverse_frequency_weights(const ChunkDataset& data, int n_classes) {
  const auto counts = data.class_counts(n_classes);
  std::vector<double> w(n_classes, 0.0);
  for (int c = 0; c < n_classes; ++c) {
    if (counts[c] > 0) {
      w[c] = static_cast<double>(data.size()) /
             (static_cast<double>(n_classes) * static_cast<double>(counts[c]));
    }
  }
  return w;
}

bool EarlyStopping::update(int epoch, double val_loss) {
  if (best_epoch_ == 0 || val_loss < best_loss_) {
    best_epoch_ = epoch;
    best_loss_ = val_loss;
    bad_epochs_ = 0;
    return true;
  }
  ++bad_epochs_;
  return false;
}

Matrix predict(const CnnModel& model, std::span<const double> inputs, int n,
               int batch_size, int workers) {
  const size_t in_size = model.input_size();
  if (inputs.size() != static_cast<size_t>(n) * in_size) {
    throw Error(ErrorKind::kShape, "predict: input size mismatch");
  }
  const int n_classes = model.n_classes();
  Matrix out(n, n_classes);
  if (n == 0) return out;
  const size_t n_batches = (static_cast<size_t>(n) + batch_size - 1) / batch_size;
  parallel_for(n_batches, workers, [&](size_t i) {
    const int lo = static_cast<int>(i) * batch_size;
    const int count = std::min(batch_size, n - lo);
    ForwardTrace trace;
    forward_trace(model, inputs.subspan(lo * in_size, count * in_size), count, trace);
    std::memcpy(out.data() + static_cast<size_t>(lo) * n_classes, trace.posteriors().data(),
                static_cast<size_t>(count) * n_classes * sizeof(double));
  });
  return out;
}

Evaluation evaluate(const CnnModel& model, const ChunkDataset& data,
                    std::span<const double> class_weights, int batch_size,
                    int workers) {
  const int n = static_cast<int>(data.size());
  const int n_classes = model.n_classes();
  Matrix posteriors(n, n_classes);
  const size_t n_batches = (static_cast<size_t>(n) + batch_size - 1) / batch_size;
  parallel_for(n_batches, workers, [&](size_t i) {
    const int lo = static_cast<int>(i) * batch_size;
    const int count = std::min(batch_size, n - lo);
    std::vector<double> inputs(static_cast<size_t>(count) * data.input_size());
    for (int k = 0; k < count; ++k) {
      data.copy_input(lo + k, inputs.data() + k * data.input_size());
    }
    ForwardTrace trace;
    forward_trace(model, inputs, count, trace);
    std::memcpy(posteriors.data() + static_cast<size_t>(lo) * n_classes,
                trace.posteriors().data(),
                static_cast<size_t>(count) * n_classes * sizeof(double));
  });
  std::vector<int> labels(n);
  int correct = 0;
  for (int i = 0; i < n; ++i) {
    labels[i] = data.label(i);
    if (argmax_row(posteriors.data() + static_cast<size_t>(i) * n_classes, n_classes) ==
        labels[i]) {
      ++correct;
    }
  }
  Evaluation ev;
  ev.loss = cross_entropy(posteriors, labels, class_weights);
  ev.accuracy = n > 0 ? static_cast<double>(correct) / n : 0.0;
  return ev;
}

TrainResult train(CnnModel model, const ChunkDataset& train_data,
                  const ChunkDataset& val_data, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_data.size() == 0 || val_data.size() == 0) {
    throw Error(ErrorKind::kConfig, "train: need at least one training and one validation chunk");
  }
  for (const ChunkDataset* d : {&train_data, &val_data}) {
    if (d->chunk_frames() != model.input_frames || d->n_mels() != model.input_mels) {
      throw Error(ErrorKind::kShape, "train: dataset geometry differs from model input");
    }
  }
  const int n_classes = model.n_classes();
  if (!cfg.class_weights.empty() &&
      cfg.class_weights.size() != static_cast<size_t>(n_classes)) {
    throw Error(ErrorKind::kConfig, "train: class_weights needs one entry per class");
  }
  const std::span<const double> weights(cfg.class_weights);
  const size_t n = train_data.size();
  const size_t in_size = model.input_size();
  const int shards = cfg.grad_shards;

  Rng rng(Rng::derive(cfg.seed, 0x5eed));
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});

  AdamState adam = AdamState::zeros_like(model);
  std::vector<Gradients> shard_grads(shards, Gradients::zeros_like(model));
  std::vector<ForwardTrace> traces(shards);
  std::vector<double> shard_loss(shards);
  std::vector<int> shard_correct(shards);
  Gradients total = Gradients::zeros_like(model);
  std::vector<double> inputs(static_cast<size_t>(cfg.batch_size) * in_size);
  std::vector<int> labels(cfg.batch_size);

  TrainResult result;
  result.model = model;
  EarlyStopping early(cfg.early_stop_patience);
  int64_t step = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    long long correct = 0;
    int batch_index = 0;
    for (size_t start = 0; start < n; start += cfg.batch_size, ++batch_index) {
      const int b = static_cast<int>(std::min<size_t>(cfg.batch_size, n - start));
      for (int k = 0; k < b; ++k) {
        train_data.copy_input(order[start + k], inputs.data() + k * in_size);
        labels[k] = train_data.label(order[start + k]);
      }
      parallel_for(shards, cfg.workers, [&](size_t s) {
        const int lo = static_cast<int>(s * b / shards);
        const int hi = static_cast<int>((s + 1) * b / shards);
        shard_grads[s].set_zero();
        shard_loss[s] = 0.0;
        shard_correct[s] = 0;
        if (lo == hi) return;
        const int count = hi - lo;
        forward_trace(model, std::span<const double>(inputs).subspan(lo * in_size, count * in_size),
                      count, traces[s]);
        const std::span<const int> shard_labels(labels.data() + lo, count);
        const auto& p = traces[s].posteriors();
        for (int k = 0; k < count; ++k) {
          const double* row = p.data() + static_cast<size_t>(k) * n_classes;
          const int y = shard_labels[k];
          shard_loss[s] += -(weights.empty() ? 1.0 : weights[y]) *
                           std::log(std::max(row[y], 1e-12));
          if (argmax_row(row, n_classes) == y) ++shard_correct[s];
        }
        accumulate_gradients(model, traces[s], shard_labels, weights, 1.0 / b,
                             shard_grads[s]);
      });
      double batch_loss = 0.0;
      total.set_zero();
      for (int s = 0; s < shards; ++s) {
        batch_loss += shard_loss[s];
        correct += shard_correct[s];
        total.add(shard_grads[s]);
      }
      if (!std::isfinite(batch_loss)) {
        throw Error(ErrorKind::kDivergence, "non-finite loss at epoch " +
                                                std::to_string(epoch) + ", batch " +
                                                std::to_string(batch_index));
      }
      loss_sum += batch_loss;
      adam_step(model, total, adam, ++step, cfg);
    }

    const Evaluation val = evaluate(model, val_data, weights, cfg.batch_size, cfg.workers);
    if (!std::isfinite(val.loss)) {
      throw Error(ErrorKind::kDivergence,
                  "non-finite validation loss at epoch " + std::to_string(epoch));
    }
    EpochStats stats{epoch, loss_sum / static_cast<double>(n),
                     static_cast<double>(correct) / static_cast<double>(n), val.loss,
                     val.accuracy};
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats);
    if (early.update(epoch, val.loss)) result.model = model;
    if (early.should_stop()) {
      result.early_stopped = true;
      break;
    }
  }
  result.best_epoch = early.best_epoch();
  return result;
}

}  // namespace sadsid::nn
