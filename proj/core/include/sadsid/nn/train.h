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

#ifndef SADSID_NN_TRAIN_H_
#define SADSID_NN_TRAIN_H_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "sadsid/dsp.h"
#include "sadsid/nn/model.h"

namespace sadsid::nn {

struct TrainConfig {
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int batch_size = 64;
  int max_epochs = 30;
  int early_stop_patience = 5;
  uint64_t seed = 7;
  std::vector<double> class_weights;  // empty: all ones
  // Each minibatch is split into this many contiguous shards whose gradients
  // are summed in shard order. Fixing it (instead of deriving it from
  // `workers`) keeps results identical for any worker count.
  int grad_shards = 4;
  int workers = 1;

  void validate() const;
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  static AdamState zeros_like(const CnnModel& model);
};

// Bias-corrected Adam update of every parameter; t is the 1-based step.
void adam_step(CnnModel& model, const Gradients& grads, AdamState& state,
               int64_t t, const TrainConfig& cfg);

// Training examples as views into stored spectrograms: chunk i is rows
// [start, start + chunk_frames) of one source matrix. Overlapping chunks share
// storage.
class ChunkDataset {
 public:
  ChunkDataset(int chunk_frames, int n_mels);

  int add_source(Matrix spectrogram);
  void add_chunk(int source, int start_row, int label);
  // Every chunk of `batch`, labelled by `labels`.
  void add_batch(const ChunkBatch& batch, std::span<const int> labels);

  size_t size() const { return chunks_.size(); }
  int chunk_frames() const { return chunk_frames_; }
  int n_mels() const { return n_mels_; }
  size_t input_size() const { return static_cast<size_t>(chunk_frames_) * n_mels_; }
  int label(size_t i) const { return chunks_[i].label; }
  void copy_input(size_t i, double* dst) const;

  std::vector<long long> class_counts(int n_classes) const;

 private:
  struct ChunkRef {
    int source;
    int start_row;
    int label;
  };

  int chunk_frames_;
  int n_mels_;
  std::vector<Matrix> sources_;
  std::vector<ChunkRef> chunks_;
};

// w_c = N / (n_classes * count_c); classes without examples get weight 0.
std::vector<double> inverse_frequency_weights(const ChunkDataset& data, int n_classes);

// Stop after `patience` consecutive epochs without a strictly lower
// validation loss.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}

  // Returns true when `val_loss` is a new best.
  bool update(int epoch, double val_loss);
  bool should_stop() const { return bad_epochs_ >= patience_; }
  int best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }

 private:
  int patience_;
  int bad_epochs_ = 0;
  int best_epoch_ = 0;
  double best_loss_ = 0.0;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainResult {
  CnnModel model;  // snapshot with the lowest validation loss
  std::vector<EpochStats> history;
  int best_epoch = 0;
  bool early_stopped = false;
};

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

// Loss and accuracy over a dataset; reductions run in example order.
Evaluation evaluate(const CnnModel& model, const ChunkDataset& data,
                    std::span<const double> class_weights, int batch_size,
                    int workers);

// Posteriors [n x n_classes] for `n` contiguous inputs, computed in
// sub-batches on up to `workers` threads.
Matrix predict(const CnnModel& model, std::span<const double> inputs, int n,
               int batch_size, int workers);

using EpochCallback = std::function<void(const EpochStats&)>;

// Minibatch Adam on mean weighted cross-entropy. Training order is reshuffled
// every epoch from a stream seeded by cfg.seed. Throws ErrorKind::kDivergence
// on a non-finite loss.
TrainResult train(CnnModel model, const ChunkDataset& train_data,
                  const ChunkDataset& val_data, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

}  // namespace sadsid::nn

#endif  // SADSID_NN_TRAIN_H_
