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

#include <random>

#include <gtest/gtest.h>

#include "sadsid/error.h"
#include "sadsid/io.h"
#include "support/oracles.h"

namespace sadsid::nn {
namespace {

CnnModel trained_looking_sad_model() {
  CnnModel m = build_architecture(Task::kSad, 32, 40, {"S", "NS"}, 11);
  std::mt19937_64 gen(12);
  std::normal_distribution<double> g;
  for (auto p : m.parameters()) {
    for (double& v : p) v += 0.01 * g(gen);
  }
  for (int b = 0; b < 40; ++b) {
    m.norm_stats.mean.push_back(g(gen));
    m.norm_stats.std.push_back(1.0 + std::abs(g(gen)));
  }
  m.feature_config.log_floor = 1e-7;
  return m;
}

ErrorKind decode_kind(const std::vector<uint8_t>& bytes, std::string* message = nullptr) {
  try {
    decode_model(bytes);
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.kind();
  }
  ADD_FAILURE() << "decode_model accepted corrupted bytes";
  return ErrorKind::kIo;
}

TEST(Serialize, RoundTripIsBitExact) {
  const CnnModel m = trained_looking_sad_model();
  testing::TempDir dir("model");
  save_model(m, dir / "sad.model");
  const CnnModel back = load_model(dir / "sad.model");
  EXPECT_EQ(back.task, m.task);
  EXPECT_EQ(back.input_frames, 32);
  EXPECT_EQ(back.input_mels, 40);
  EXPECT_EQ(back.class_labels, m.class_labels);
  EXPECT_EQ(back.feature_config, m.feature_config);
  EXPECT_EQ(back.norm_stats, m.norm_stats);
  ASSERT_EQ(back.layers.size(), m.layers.size());
  for (size_t l = 0; l < m.layers.size(); ++l) {
    EXPECT_EQ(back.layers[l].spec, m.layers[l].spec);
    EXPECT_EQ(back.layers[l].weights, m.layers[l].weights);
    EXPECT_EQ(back.layers[l].bias, m.layers[l].bias);
  }
  // Re-encoding gives the same bytes.
  EXPECT_EQ(encode_model(back), read_file_bytes(dir / "sad.model"));

  std::mt19937_64 gen(13);
  std::normal_distribution<double> g;
  std::vector<double> inputs(100 * m.input_size());
  for (double& v : inputs) v = g(gen);
  EXPECT_EQ(forward(m, inputs, 100), forward(back, inputs, 100));
}

TEST(Serialize, KeepsNonDefaultHyperparameters) {
  const testing::GradProblem p = testing::random_grad_problem(1);  // strided same conv
  CnnModel m = p.model;
  m.task = Task::kSid;
  m.class_labels = {"a", "b", "ünï"};
  const CnnModel back = decode_model(encode_model(m));
  EXPECT_EQ(back.layers[0].spec.padding, Padding::kSame);
  EXPECT_EQ(back.layers[0].spec.stride, 2);
  EXPECT_EQ(back.class_labels[2], "ünï");
  EXPECT_EQ(forward(m, p.inputs, p.batch), forward(back, p.inputs, p.batch));
}

TEST(Serialize, WrongMagicIsFormatError) {
  std::vector<uint8_t> bytes = encode_model(trained_looking_sad_model());
  bytes[0] = 'X';
  EXPECT_EQ(decode_kind(bytes), ErrorKind::kFormat);
  EXPECT_EQ(decode_kind({}), ErrorKind::kFormat);
}

TEST(Serialize, OtherVersionIsVersionError) {
  std::vector<uint8_t> bytes = encode_model(trained_looking_sad_model());
  bytes[4] = 2;
  EXPECT_EQ(decode_kind(bytes), ErrorKind::kVersion);
}

TEST(Serialize, FlippedWeightByteIsChecksumError) {
  std::vector<uint8_t> bytes = encode_model(trained_looking_sad_model());
  bytes[bytes.size() / 2] ^= 0x10;
  EXPECT_EQ(decode_kind(bytes), ErrorKind::kChecksum);
  std::vector<uint8_t> bad_crc = encode_model(trained_looking_sad_model());
  bad_crc.back() ^= 0x01;
  EXPECT_EQ(decode_kind(bad_crc), ErrorKind::kChecksum);
}

TEST(Serialize, TruncatedMidTensorNamesTheTensor) {
  std::vector<uint8_t> bytes = encode_model(trained_looking_sad_model());
  // Half the file lies inside the 64 x 1280 dense weight of layer 5.
  bytes.resize(bytes.size() / 2);
  std::string msg;
  EXPECT_EQ(decode_kind(bytes, &msg), ErrorKind::kTruncation);
  EXPECT_NE(msg.find("layer 5 weight"), std::string::npos) << msg;

  std::vector<uint8_t> header_only = encode_model(trained_looking_sad_model());
  header_only.resize(10);
  EXPECT_EQ(decode_kind(header_only), ErrorKind::kTruncation);
}

TEST(Serialize, TrailingBytesAreFormatError) {
  std::vector<uint8_t> bytes = encode_model(trained_looking_sad_model());
  bytes.push_back(0);
  EXPECT_EQ(decode_kind(bytes), ErrorKind::kFormat);
}

TEST(Serialize, MissingFileIsIoError) {
  try {
    load_model("/nonexistent/dir/x.model");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIo);
  }
}

}  // namespace
}  // namespace sadsid::nn
