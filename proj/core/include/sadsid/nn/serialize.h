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

// Model file layout (all integers u32 LE, all reals f64 LE unless noted):
//
//   "FSNN" | version = 1 | u8 task | input_frames | input_mels
//   n_labels | n_labels x (length | UTF-8 bytes)
//   FeatureConfig: frame_len_ms, frame_hop_ms, n_mels, fmin_hz, fmax_hz,
//                  chunk_len_ms, chunk_shift_ms, log_floor   (8 x f64)
//   n_bands | n_bands x mean | n_bands x std
//   n_layers | per layer:
//       u8 kind | 10 hyperparameters (n_filters, mask_h, mask_w, stride,
//       padding, pool_h, pool_w, pool_stride, n_out, relu)
//       n_tensors | per tensor: rank | rank x dim | raw f64 values
//   CRC-32 of all preceding bytes

#ifndef SADSID_NN_SERIALIZE_H_
#define SADSID_NN_SERIALIZE_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sadsid/nn/model.h"

namespace sadsid::nn {

inline constexpr uint32_t kModelFormatVersion = 1;

std::vector<uint8_t> encode_model(const CnnModel& model);

// Errors: ErrorKind::kFormat (bad magic or inconsistent structure),
// kVersion, kTruncation (names the field or tensor being read) and kChecksum.
CnnModel decode_model(std::span<const uint8_t> bytes);

void save_model(const CnnModel& model, const std::filesystem::path& path);
CnnModel load_model(const std::filesystem::path& path);

}  // namespace sadsid::nn

#endif  // SADSID_NN_SERIALIZE_H_
