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

#include "sadsid/dsp.h"

#include <unsupported/Eigen/FFT>
#include <cmath>
#include <complex>
#include <cstring>
#include <numbers>

#include "sadsid/error.h"
#include "sadsid/io.h"

namespace sadsid {
namespace {

// Whole number of `unit` in `value`, or -1.
int whole_multiple(double value, double unit) {
  const double ratio = value / unit;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    return -1;
  }
  return static_cast<int>(rounded);
}

constexpr char kCacheMagic[6] = {'F', 'S', 'M', 'E', 'L', '1'};

}  // namespace

FeatureConfig FeatureConfig::sad() { return FeatureConfig{}; }

FeatureConfig FeatureConfig::sid() {
  FeatureConfig cfg;
  cfg.frame_len_ms = 25.0;
  cfg.chunk_len_ms = 1280.0;
  cfg.chunk_shift_ms = 160.0;
  return cfg;
}

void FeatureConfig::validate(int sample_rate_hz) const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorKind::kConfig, "feature config: " + what);
  };
  if (!(frame_len_ms > 0.0) || !(frame_hop_ms > 0.0)) {
    fail("frame_len_ms and frame_hop_ms must be positive");
  }
  if (n_mels < 1) fail("n_mels must be >= 1");
  if (chunk_frames() < 1) {
    fail("chunk_len_ms must be a positive multiple of frame_hop_ms");
  }
  if (shift_frames() < 1) {
    fail("chunk_shift_ms must be a positive multiple of frame_hop_ms");
  }
  if (shift_frames() > chunk_frames()) fail("chunk shift exceeds chunk length");
  if (!(log_floor >= 0.0)) fail("log_floor must be >= 0");
  if (sample_rate_hz > 0) {
    if (frame_samples(sample_rate_hz) < 2 || hop_samples(sample_rate_hz) < 1) {
      fail("frame shorter than two samples");
    }
    const double upper = upper_edge_hz(sample_rate_hz);
    if (!(fmin_hz >= 0.0) || !(fmin_hz < upper) ||
        upper > sample_rate_hz / 2.0 + 1e-9) {
      fail("need 0 <= fmin_hz < fmax_hz <= sample_rate / 2");
    }
  }
}

int FeatureConfig::frame_samples(int sample_rate_hz) const {
  return static_cast<int>(std::lround(frame_len_ms * sample_rate_hz / 1000.0));
}

int FeatureConfig::hop_samples(int sample_rate_hz) const {
  return static_cast<int>(std::lround(frame_hop_ms * sample_rate_hz / 1000.0));
}

int FeatureConfig::chunk_frames() const {
  return whole_multiple(chunk_len_ms, frame_hop_ms);
}

int FeatureConfig::shift_frames() const {
  return whole_multiple(chunk_shift_ms, frame_hop_ms);
}

int frame_count(size_t n_samples, int frame_samples, int hop_samples) {
  if (n_samples < static_cast<size_t>(frame_samples)) return 0;
  return static_cast<int>((n_samples - frame_samples) / hop_samples) + 1;
}

int chunk_count(int n_frames, int chunk_frames, int shift_frames) {
  if (n_frames < chunk_frames) return 0;
  return (n_frames - chunk_frames) / shift_frames + 1;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank::MelFilterbank(int n_mels, int fft_size, int sample_rate_hz,
                             double fmin_hz, double fmax_hz)
    : fft_size_(fft_size), sample_rate_hz_(sample_rate_hz) {
  const double mel_lo = hz_to_mel(fmin_hz);
  const double mel_hi = hz_to_mel(fmax_hz);
  edges_hz_.resize(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) {
    edges_hz_[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1));
  }
  weights_ = Matrix::Zero(n_mels, n_bins());
  for (int m = 0; m < n_mels; ++m) {
    const double left = edges_hz_[m];
    const double center = edges_hz_[m + 1];
    const double right = edges_hz_[m + 2];
    for (int k = 0; k < n_bins(); ++k) {
      const double f = bin_hz(k);
      if (f > left && f < center) {
        weights_(m, k) = (f - left) / (center - left);
      } else if (f >= center && f < right) {
        weights_(m, k) = (right - f) / (right - center);
      }
    }
  }
}

int fft_size_for(int frame_samples) {
  int n = 1;
  while (n < frame_samples) n <<= 1;
  return n;
}

MelSpectrogram mel_spectrogram(const AudioBuffer& audio, const FeatureConfig& cfg) {
  cfg.validate(audio.sample_rate_hz);
  const int sr = audio.sample_rate_hz;
  const int frame = cfg.frame_samples(sr);
  const int hop = cfg.hop_samples(sr);
  const int n_frames = frame_count(audio.samples.size(), frame, hop);
  if (n_frames == 0) {
    throw Error(ErrorKind::kEmptyInput,
                audio.id + ": audio shorter than one frame (" +
                    std::to_string(audio.samples.size()) + " < " +
                    std::to_string(frame) + " samples)");
  }

  const int n_fft = fft_size_for(frame);
  const MelFilterbank bank(cfg.n_mels, n_fft, sr, cfg.fmin_hz, cfg.upper_edge_hz(sr));
  std::vector<double> window(frame);
  for (int i = 0; i < frame; ++i) {
    window[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (frame - 1));
  }

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> buffer(n_fft, 0.0);
  std::vector<std::complex<double>> spectrum;
  Eigen::VectorXd power(bank.n_bins());

  MelSpectrogram out;
  out.id = audio.id;
  out.frame_hop_ms = cfg.frame_hop_ms;
  out.frame_len_ms = cfg.frame_len_ms;
  out.values.resize(n_frames, cfg.n_mels);
  for (int t = 0; t < n_frames; ++t) {
    const double* x = audio.samples.data() + static_cast<size_t>(t) * hop;
    for (int i = 0; i < frame; ++i) buffer[i] = x[i] * window[i];
    fft.fwd(spectrum, buffer);
    for (int k = 0; k < bank.n_bins(); ++k) power[k] = std::norm(spectrum[k]);
    const Eigen::VectorXd energies = bank.weights() * power;
    for (int m = 0; m < cfg.n_mels; ++m) {
      out.values(t, m) = std::log(energies[m] + cfg.log_floor);
    }
  }
  return out;
}

ChunkBatch chunk(const MelSpectrogram& spec, const FeatureConfig& cfg) {
  const int chunk_frames = cfg.chunk_frames();
  const int shift_frames = cfg.shift_frames();
  if (chunk_frames < 1 || shift_frames < 1) {
    throw Error(ErrorKind::kConfig, "chunk grid is not a whole number of frames");
  }
  if (std::abs(spec.frame_hop_ms - cfg.frame_hop_ms) > 1e-9) {
    throw Error(ErrorKind::kConfig, spec.id + ": spectrogram hop " +
                                        format_fixed(spec.frame_hop_ms, 3) +
                                        " ms differs from config hop");
  }
  ChunkBatch batch;
  batch.chunk_frames = chunk_frames;
  batch.n_mels = spec.n_mels();
  batch.shift_s = cfg.chunk_shift_s();
  batch.source_id = spec.id;
  batch.n_chunks = chunk_count(spec.n_frames(), chunk_frames, shift_frames);
  batch.data.resize(static_cast<size_t>(batch.n_chunks) * batch.chunk_size());
  batch.chunk_start_times_s.resize(batch.n_chunks);
  for (int k = 0; k < batch.n_chunks; ++k) {
    const double* src = spec.values.data() +
                        static_cast<size_t>(k) * shift_frames * batch.n_mels;
    std::memcpy(batch.data.data() + k * batch.chunk_size(), src,
                batch.chunk_size() * sizeof(double));
    batch.chunk_start_times_s[k] = k * batch.shift_s;
  }
  return batch;
}

NormAccumulator::NormAccumulator(int n_mels)
    : n_mels_(n_mels), shift_(n_mels, 0.0), sum_(n_mels, 0.0), sum_sq_(n_mels, 0.0) {}

void NormAccumulator::add_row(const double* row) {
  if (count_ == 0) shift_.assign(row, row + n_mels_);
  for (int m = 0; m < n_mels_; ++m) {
    const double d = row[m] - shift_[m];
    sum_[m] += d;
    sum_sq_[m] += d * d;
  }
  ++count_;
}

void NormAccumulator::add(const Matrix& rows) {
  if (rows.cols() != n_mels_) {
    throw Error(ErrorKind::kShape, "norm stats: band count mismatch");
  }
  for (Eigen::Index r = 0; r < rows.rows(); ++r) add_row(rows.data() + r * n_mels_);
}

void NormAccumulator::add(const ChunkBatch& batch) {
  if (batch.n_mels != n_mels_) {
    throw Error(ErrorKind::kShape, "norm stats: band count mismatch");
  }
  const size_t rows = static_cast<size_t>(batch.n_chunks) * batch.chunk_frames;
  for (size_t r = 0; r < rows; ++r) add_row(batch.data.data() + r * n_mels_);
}

NormStats NormAccumulator::finish() const {
  NormStats stats{std::vector<double>(n_mels_, 0.0), std::vector<double>(n_mels_, 1.0)};
  if (count_ == 0) return stats;
  const double n = static_cast<double>(count_);
  for (int m = 0; m < n_mels_; ++m) {
    const double mean_shifted = sum_[m] / n;
    const double var = std::max(0.0, sum_sq_[m] / n - mean_shifted * mean_shifted);
    stats.mean[m] = shift_[m] + mean_shifted;
    const double sd = std::sqrt(var);
    stats.std[m] = sd > 0.0 ? sd : 1.0;
  }
  return stats;
}

NormStats compute_norm_stats(const ChunkBatch& batch) {
  NormAccumulator acc(batch.n_mels);
  acc.add(batch);
  return acc.finish();
}

ChunkBatch per_feature_normalize(ChunkBatch batch, const NormStats& stats) {
  if (stats.mean.size() != static_cast<size_t>(batch.n_mels) ||
      stats.std.size() != static_cast<size_t>(batch.n_mels)) {
    throw Error(ErrorKind::kShape, "norm stats: band count mismatch");
  }
  const size_t rows = static_cast<size_t>(batch.n_chunks) * batch.chunk_frames;
  for (size_t r = 0; r < rows; ++r) {
    double* row = batch.data.data() + r * batch.n_mels;
    for (int m = 0; m < batch.n_mels; ++m) {
      const double sd = stats.std[m] > 0.0 ? stats.std[m] : 1.0;
      row[m] = (row[m] - stats.mean[m]) / sd;
    }
  }
  return batch;
}

void normalize_in_place(Matrix& rows, const NormStats& stats) {
  if (stats.mean.size() != static_cast<size_t>(rows.cols()) ||
      stats.std.size() != static_cast<size_t>(rows.cols())) {
    throw Error(ErrorKind::kShape, "norm stats: band count mismatch");
  }
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    for (Eigen::Index m = 0; m < rows.cols(); ++m) {
      const double sd = stats.std[m] > 0.0 ? stats.std[m] : 1.0;
      rows(r, m) = (rows(r, m) - stats.mean[m]) / sd;
    }
  }
}

std::vector<uint8_t> encode_feature_cache(const MelSpectrogram& spec) {
  ByteWriter w;
  w.raw(std::span(reinterpret_cast<const uint8_t*>(kCacheMagic), sizeof(kCacheMagic)));
  w.u32(static_cast<uint32_t>(spec.n_frames()));
  w.u32(static_cast<uint32_t>(spec.n_mels()));
  w.f32(static_cast<float>(spec.frame_hop_ms));
  for (Eigen::Index i = 0; i < spec.values.size(); ++i) {
    w.f32(static_cast<float>(spec.values.data()[i]));
  }
  return w.bytes();
}

MelSpectrogram decode_feature_cache(std::span<const uint8_t> bytes, std::string id) {
  ByteReader r(bytes);
  const auto magic = r.raw(sizeof(kCacheMagic), "feature cache magic");
  if (std::memcmp(magic.data(), kCacheMagic, sizeof(kCacheMagic)) != 0) {
    throw Error(ErrorKind::kFormat, id + ": not a feature cache (bad magic)");
  }
  const uint32_t n_frames = r.u32("n_frames");
  const uint32_t n_mels = r.u32("n_mels");
  MelSpectrogram spec;
  spec.id = std::move(id);
  spec.frame_hop_ms = r.f32("hop_ms");
  spec.values.resize(n_frames, n_mels);
  for (Eigen::Index i = 0; i < spec.values.size(); ++i) {
    spec.values.data()[i] = r.f32("feature values");
  }
  return spec;
}

void round_to_f32(MelSpectrogram& spec) {
  for (Eigen::Index i = 0; i < spec.values.size(); ++i) {
    double& v = spec.values.data()[i];
    v = static_cast<float>(v);
  }
  spec.frame_hop_ms = static_cast<float>(spec.frame_hop_ms);
}

}  // namespace sadsid
