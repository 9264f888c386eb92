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

#ifndef SADSID_DSP_H_
#define SADSID_DSP_H_

#include <Eigen/Core>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sadsid/audio.h"

namespace sadsid {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct FeatureConfig {
  double frame_len_ms = 50.0;
  double frame_hop_ms = 10.0;
  int n_mels = 40;
  double fmin_hz = 0.0;
  double fmax_hz = 0.0;  // 0 means Nyquist
  double chunk_len_ms = 320.0;
  double chunk_shift_ms = 160.0;
  double log_floor = 1e-10;

  // 50 ms frames, 320 ms chunks.
  static FeatureConfig sad();
  // 25 ms frames, 1.28 s chunks.
  static FeatureConfig sid();

  // Throws ErrorKind::kConfig when the chunk grid is not a whole number of
  // hops or the band edges do not fit the sample rate.
  void validate(int sample_rate_hz) const;

  int frame_samples(int sample_rate_hz) const;
  int hop_samples(int sample_rate_hz) const;
  int chunk_frames() const;
  int shift_frames() const;
  double chunk_shift_s() const { return chunk_shift_ms / 1000.0; }
  double upper_edge_hz(int sample_rate_hz) const {
    return fmax_hz > 0.0 ? fmax_hz : sample_rate_hz / 2.0;
  }

  bool operator==(const FeatureConfig&) const = default;
};

// Time x mel matrix of log mel energies for one utterance.
struct MelSpectrogram {
  Matrix values;
  double frame_hop_ms = 10.0;
  double frame_len_ms = 50.0;
  std::string id;

  int n_frames() const { return static_cast<int>(values.rows()); }
  int n_mels() const { return static_cast<int>(values.cols()); }
};

// Overlapping fixed-size windows of spectrogram rows, stored chunk-major.
struct ChunkBatch {
  std::vector<double> data;  // [n_chunks x chunk_frames x n_mels]
  int n_chunks = 0;
  int chunk_frames = 0;
  int n_mels = 0;
  std::vector<double> chunk_start_times_s;
  double shift_s = 0.0;
  std::string source_id;

  size_t chunk_size() const { return static_cast<size_t>(chunk_frames) * n_mels; }
  std::span<const double> chunk(int k) const {
    return std::span(data).subspan(k * chunk_size(), chunk_size());
  }
  double at(int k, int row, int mel) const {
    return data[k * chunk_size() + static_cast<size_t>(row) * n_mels + mel];
  }
};

// floor((n - frame) / hop) + 1 when n >= frame, else 0.
int frame_count(size_t n_samples, int frame_samples, int hop_samples);
// floor((n - chunk) / shift) + 1 when n >= chunk, else 0.
int chunk_count(int n_frames, int chunk_frames, int shift_frames);

// HTK mel scale.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Triangular filters with HTK-spaced edges over the rfft bins of an
// fft_size-point transform.
class MelFilterbank {
 public:
  MelFilterbank(int n_mels, int fft_size, int sample_rate_hz, double fmin_hz,
                double fmax_hz);

  const Matrix& weights() const { return weights_; }  // [n_mels x n_bins]
  double center_hz(int band) const { return edges_hz_[band + 1]; }
  double bin_hz(int bin) const {
    return static_cast<double>(bin) * sample_rate_hz_ / fft_size_;
  }
  int n_bins() const { return fft_size_ / 2 + 1; }

 private:
  int fft_size_;
  int sample_rate_hz_;
  std::vector<double> edges_hz_;
  Matrix weights_;
};

int fft_size_for(int frame_samples);

// Hamming window, |rfft|^2, mel filterbank, log(energy + log_floor).
MelSpectrogram mel_spectrogram(const AudioBuffer& audio, const FeatureConfig& cfg);

// Chunk k holds rows [k * shift, k * shift + chunk). Frames past the last
// full chunk are dropped; fewer frames than one chunk gives an empty batch.
ChunkBatch chunk(const MelSpectrogram& spec, const FeatureConfig& cfg);

struct NormStats {
  std::vector<double> mean;
  std::vector<double> std;

  bool operator==(const NormStats&) const = default;
};

// Per-band mean / population standard deviation, accumulated in a fixed
// order. Bands whose deviation is not positive get std = 1.
class NormAccumulator {
 public:
  explicit NormAccumulator(int n_mels);
  void add(const Matrix& rows);
  void add(const ChunkBatch& batch);
  NormStats finish() const;

 private:
  void add_row(const double* row);

  int n_mels_;
  long long count_ = 0;
  std::vector<double> shift_;
  std::vector<double> sum_;
  std::vector<double> sum_sq_;
};

NormStats compute_norm_stats(const ChunkBatch& batch);

// x' = (x - mean) / std per mel band.
ChunkBatch per_feature_normalize(ChunkBatch batch, const NormStats& stats);
void normalize_in_place(Matrix& rows, const NormStats& stats);

// Feature cache blob: "FSMEL1", u32 n_frames, u32 n_mels, f32 hop_ms, then
// row-major f32 LE values.
std::vector<uint8_t> encode_feature_cache(const MelSpectrogram& spec);
MelSpectrogram decode_feature_cache(std::span<const uint8_t> bytes, std::string id);

// Rounds every value to f32 precision, matching a cache round trip.
void round_to_f32(MelSpectrogram& spec);

}  // namespace sadsid

#endif  // SADSID_DSP_H_
