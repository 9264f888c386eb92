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

#include "sadsid/nn/serialize.h"

#include <zlib.h>

#include <cstring>

#include "sadsid/error.h"
#include "sadsid/io.h"

namespace sadsid::nn {
namespace {

constexpr char kMagic[4] = {'F', 'S', 'N', 'N'};

uint32_t crc32_of(std::span<const uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  size_t done = 0;
  while (done < bytes.size()) {
    const auto n = static_cast<uInt>(std::min<size_t>(bytes.size() - done, 1u << 30));
    crc = crc32(crc, bytes.data() + done, n);
    done += n;
  }
  return static_cast<uint32_t>(crc);
}

std::vector<uint32_t> hyperparameters(const LayerSpec& s) {
  return {static_cast<uint32_t>(s.n_filters), static_cast<uint32_t>(s.mask_h),
          static_cast<uint32_t>(s.mask_w),    static_cast<uint32_t>(s.stride),
          static_cast<uint32_t>(s.padding),   static_cast<uint32_t>(s.pool_h),
          static_cast<uint32_t>(s.pool_w),    static_cast<uint32_t>(s.pool_stride),
          static_cast<uint32_t>(s.n_out),     static_cast<uint32_t>(s.relu)};
}

// Dimensions written for the weight tensor of a parameterized layer.
std::vector<uint32_t> weight_dims(const Layer& layer) {
  if (layer.spec.kind == LayerKind::kConv2d) {
    return {static_cast<uint32_t>(layer.spec.n_filters),
            static_cast<uint32_t>(layer.input.channels),
            static_cast<uint32_t>(layer.spec.mask_h),
            static_cast<uint32_t>(layer.spec.mask_w)};
  }
  return {static_cast<uint32_t>(layer.output.channels),
          static_cast<uint32_t>(layer.input.size())};
}

void write_tensor(ByteWriter& w, const std::vector<uint32_t>& dims,
                  const std::vector<double>& values) {
  w.u32(static_cast<uint32_t>(dims.size()));
  for (uint32_t d : dims) w.u32(d);
  for (double v : values) w.f64(v);
}

void read_tensor(ByteReader& r, const std::string& name,
                 const std::vector<uint32_t>& expected_dims, std::vector<double>& out) {
  const uint32_t rank = r.u32(name + " rank");
  if (rank != expected_dims.size()) {
    throw Error(ErrorKind::kFormat, name + ": rank " + std::to_string(rank) +
                                        ", expected " +
                                        std::to_string(expected_dims.size()));
  }
  for (uint32_t i = 0; i < rank; ++i) {
    const uint32_t d = r.u32(name + " dims");
    if (d != expected_dims[i]) {
      throw Error(ErrorKind::kFormat, name + ": dimension " + std::to_string(i) +
                                          " is " + std::to_string(d) + ", expected " +
                                          std::to_string(expected_dims[i]));
    }
  }
  for (double& v : out) v = r.f64(name);
}

}  // namespace

std::vector<uint8_t> encode_model(const CnnModel& model) {
  ByteWriter w;
  w.raw(std::span(reinterpret_cast<const uint8_t*>(kMagic), sizeof(kMagic)));
  w.u32(kModelFormatVersion);
  w.u8(static_cast<uint8_t>(model.task));
  w.u32(static_cast<uint32_t>(model.input_frames));
  w.u32(static_cast<uint32_t>(model.input_mels));
  w.u32(static_cast<uint32_t>(model.class_labels.size()));
  for (const auto& label : model.class_labels) w.str(label);

  const FeatureConfig& fc = model.feature_config;
  for (double v : {fc.frame_len_ms, fc.frame_hop_ms, static_cast<double>(fc.n_mels),
                   fc.fmin_hz, fc.fmax_hz, fc.chunk_len_ms, fc.chunk_shift_ms,
                   fc.log_floor}) {
    w.f64(v);
  }

  w.u32(static_cast<uint32_t>(model.norm_stats.mean.size()));
  for (double v : model.norm_stats.mean) w.f64(v);
  for (double v : model.norm_stats.std) w.f64(v);

  w.u32(static_cast<uint32_t>(model.layers.size()));
  for (const Layer& layer : model.layers) {
    w.u8(static_cast<uint8_t>(layer.spec.kind));
    const auto hyper = hyperparameters(layer.spec);
    w.u32(static_cast<uint32_t>(hyper.size()));
    for (uint32_t h : hyper) w.u32(h);
    if (!layer.has_parameters()) {
      w.u32(0);
      continue;
    }
    w.u32(2);
    write_tensor(w, weight_dims(layer), layer.weights);
    write_tensor(w, {static_cast<uint32_t>(layer.bias.size())}, layer.bias);
  }
  w.u32(crc32_of(w.bytes()));
  return w.bytes();
}

CnnModel decode_model(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  if (bytes.size() < sizeof(kMagic) ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorKind::kFormat, "not a model file (bad magic)");
  }
  r.raw(sizeof(kMagic), "magic");
  const uint32_t version = r.u32("version");
  if (version != kModelFormatVersion) {
    throw Error(ErrorKind::kVersion, "model format version " + std::to_string(version) +
                                         " (this build reads version " +
                                         std::to_string(kModelFormatVersion) + ")");
  }
  const uint8_t task = r.u8("task");
  if (task > 1) throw Error(ErrorKind::kFormat, "unknown task tag " + std::to_string(task));
  const auto input_frames = static_cast<int>(r.u32("input_frames"));
  const auto input_mels = static_cast<int>(r.u32("input_mels"));
  const uint32_t n_labels = r.u32("label count");
  std::vector<std::string> labels;
  for (uint32_t i = 0; i < n_labels; ++i) labels.push_back(r.str("class label"));

  FeatureConfig fc;
  fc.frame_len_ms = r.f64("feature config");
  fc.frame_hop_ms = r.f64("feature config");
  fc.n_mels = static_cast<int>(r.f64("feature config"));
  fc.fmin_hz = r.f64("feature config");
  fc.fmax_hz = r.f64("feature config");
  fc.chunk_len_ms = r.f64("feature config");
  fc.chunk_shift_ms = r.f64("feature config");
  fc.log_floor = r.f64("feature config");

  NormStats stats;
  const uint32_t n_bands = r.u32("norm stats size");
  if (n_bands > r.remaining() / 16) {
    throw Error(ErrorKind::kTruncation, "norm stats: " + std::to_string(n_bands) +
                                            " bands do not fit in the file");
  }
  stats.mean.resize(n_bands);
  stats.std.resize(n_bands);
  for (double& v : stats.mean) v = r.f64("norm stats mean");
  for (double& v : stats.std) v = r.f64("norm stats std");

  const uint32_t n_layers = r.u32("layer count");
  if (n_layers == 0 || n_layers > 1024) {
    throw Error(ErrorKind::kFormat, "implausible layer count " + std::to_string(n_layers));
  }
  std::vector<LayerSpec> specs;
  std::vector<size_t> tensor_offsets;
  for (uint32_t l = 0; l < n_layers; ++l) {
    const std::string where = "layer " + std::to_string(l + 1);
    LayerSpec s;
    const uint8_t kind = r.u8(where + " kind");
    if (kind < 1 || kind > 5) {
      throw Error(ErrorKind::kFormat, where + ": unknown layer kind " + std::to_string(kind));
    }
    s.kind = static_cast<LayerKind>(kind);
    const uint32_t n_hyper = r.u32(where + " hyperparameter count");
    if (n_hyper != 10) {
      throw Error(ErrorKind::kFormat, where + ": expected 10 hyperparameters");
    }
    s.n_filters = static_cast<int>(r.u32(where + " hyperparameters"));
    s.mask_h = static_cast<int>(r.u32(where + " hyperparameters"));
    s.mask_w = static_cast<int>(r.u32(where + " hyperparameters"));
    s.stride = static_cast<int>(r.u32(where + " hyperparameters"));
    const uint32_t padding = r.u32(where + " hyperparameters");
    if (padding > 1) throw Error(ErrorKind::kFormat, where + ": unknown padding mode");
    s.padding = static_cast<Padding>(padding);
    s.pool_h = static_cast<int>(r.u32(where + " hyperparameters"));
    s.pool_w = static_cast<int>(r.u32(where + " hyperparameters"));
    s.pool_stride = static_cast<int>(r.u32(where + " hyperparameters"));
    s.n_out = static_cast<int>(r.u32(where + " hyperparameters"));
    s.relu = r.u32(where + " hyperparameters") != 0;
    specs.push_back(s);

    // Tensors are read after the architecture is rebuilt, so remember where
    // they start and skip over them using their own headers.
    tensor_offsets.push_back(r.offset());
    const uint32_t n_tensors = r.u32(where + " tensor count");
    for (uint32_t t = 0; t < n_tensors; ++t) {
      const std::string name = where + (t == 0 ? " weight" : " bias");
      const uint32_t rank = r.u32(name + " rank");
      if (rank > 8) throw Error(ErrorKind::kFormat, name + ": implausible rank");
      uint64_t count = 1;
      for (uint32_t i = 0; i < rank; ++i) count *= r.u32(name + " dims");
      if (count > r.remaining() / 8) {
        throw Error(ErrorKind::kTruncation,
                    "truncated while reading " + name + " values at byte offset " +
                        std::to_string(r.offset()) + " (need " + std::to_string(count * 8) +
                        " bytes, " + std::to_string(r.remaining()) + " left)");
      }
      r.raw(count * 8, name);
    }
  }
  const size_t body_end = r.offset();
  const uint32_t stored_crc = r.u32("checksum");
  if (r.remaining() != 0) {
    throw Error(ErrorKind::kFormat, std::to_string(r.remaining()) +
                                        " trailing bytes after checksum");
  }
  if (crc32_of(bytes.first(body_end)) != stored_crc) {
    throw Error(ErrorKind::kChecksum, "model file checksum mismatch");
  }

  CnnModel model = build_model(input_frames, input_mels, specs);
  model.task = static_cast<Task>(task);
  model.class_labels = std::move(labels);
  model.feature_config = fc;
  model.norm_stats = std::move(stats);
  if (model.class_labels.size() != static_cast<size_t>(model.n_classes())) {
    throw Error(ErrorKind::kFormat, "label table size differs from output width");
  }
  for (uint32_t l = 0; l < n_layers; ++l) {
    Layer& layer = model.layers[l];
    ByteReader tr(bytes.first(body_end).subspan(tensor_offsets[l]));
    const std::string where = "layer " + std::to_string(l + 1);
    const uint32_t n_tensors = tr.u32(where + " tensor count");
    if (n_tensors != (layer.has_parameters() ? 2u : 0u)) {
      throw Error(ErrorKind::kFormat, where + ": unexpected tensor count");
    }
    if (!layer.has_parameters()) continue;
    read_tensor(tr, where + " weight", weight_dims(layer), layer.weights);
    read_tensor(tr, where + " bias", {static_cast<uint32_t>(layer.bias.size())}, layer.bias);
  }
  return model;
}

void save_model(const CnnModel& model, const std::filesystem::path& path) {
  write_file_bytes(path, encode_model(model));
}

CnnModel load_model(const std::filesystem::path& path) {
  return decode_model(read_file_bytes(path));
}

}  // namespace sadsid::nn
