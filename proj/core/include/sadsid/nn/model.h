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

#ifndef SADSID_NN_MODEL_H_
#define SADSID_NN_MODEL_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sadsid/dsp.h"
#include "sadsid/nn/layers.h"

namespace sadsid {

enum class Task : uint8_t { kSad = 0, kSid = 1 };

std::string_view task_name(Task task);
Task parse_task(std::string_view text);

namespace nn {

struct Layer {
  LayerSpec spec;
  Shape3 input;
  Shape3 output;
  std::vector<double> weights;  // conv [F][C][kh][kw]; dense [out][in]
  std::vector<double> bias;

  bool has_parameters() const {
    return spec.kind == LayerKind::kConv2d || spec.kind == LayerKind::kDense ||
           spec.kind == LayerKind::kSoftmaxOutput;
  }
};

// A single-channel-input CNN classifier plus everything needed to apply it
// to raw audio: the feature configuration, the training-set normalization
// and the class label table.
class CnnModel {
 public:
  Task task = Task::kSad;
  int input_frames = 0;
  int input_mels = 0;
  std::vector<std::string> class_labels;
  FeatureConfig feature_config;
  NormStats norm_stats;
  std::vector<Layer> layers;

  int n_classes() const { return layers.empty() ? 0 : layers.back().output.channels; }
  size_t input_size() const {
    return static_cast<size_t>(input_frames) * input_mels;
  }

  // Weight and bias tensors of every parameterized layer, in layer order,
  // weight before bias. Gradients and optimizer state use the same order.
  std::vector<std::span<double>> parameters();
  std::vector<std::span<const double>> parameters() const;
  std::vector<std::string> parameter_names() const;
  size_t parameter_count() const;
};

// Chains `specs` from a 1 x frames x mels input. Any dimension below 1
// raises ErrorKind::kArchitecture naming the 1-based layer index. The last
// layer must be kSoftmaxOutput. Parameters are zero.
CnnModel build_model(int input_frames, int input_mels,
                     const std::vector<LayerSpec>& specs);

// conv(32, 5x5) -> maxpool(3x3, stride 3) -> conv(32, 5x5) -> flatten ->
// dense(64 for SAD / 500 for SID, ReLU) -> dense(n_classes) + softmax, with
// He-uniform weights drawn from `seed` and zero biases.
CnnModel build_architecture(Task task, int input_frames, int input_mels,
                            std::vector<std::string> class_labels, uint64_t seed);

// Uniform(-sqrt(6 / fan_in), sqrt(6 / fan_in)) weights, zero biases.
void initialize_he_uniform(CnnModel& model, uint64_t seed);

// Per-layer outputs of one forward pass, kept for the backward pass.
struct ForwardTrace {
  int batch = 0;
  std::span<const double> input;
  std::vector<std::vector<double>> outputs;  // outputs[l]: [batch x layer l output]
  std::vector<std::vector<int32_t>> argmax;  // pooling layers only
  std::vector<double> col;                   // conv scratch

  const std::vector<double>& posteriors() const { return outputs.back(); }
};

void forward_trace(const CnnModel& model, std::span<const double> inputs,
                   int batch, ForwardTrace& trace);

// Class posteriors [batch x n_classes]; each row sums to 1.
Matrix forward(const CnnModel& model, std::span<const double> inputs, int batch);

// Mean over the batch of -w_y * log(max(p_y, 1e-12)). Empty class_weights
// means weight 1 for every class.
double cross_entropy(const Matrix& posteriors, std::span<const int> labels,
                     std::span<const double> class_weights = {});
double cross_entropy(std::span<const double> posteriors, int n_classes,
                     std::span<const int> labels,
                     std::span<const double> class_weights = {});

struct Gradients {
  std::vector<std::vector<double>> tensors;  // aligned with parameters()

  static Gradients zeros_like(const CnnModel& model);
  void set_zero();
  void add(const Gradients& other);
};

// Adds scale * d/dtheta [sum over the traced batch of -w_y log p_y] into
// `grads`.
void accumulate_gradients(const CnnModel& model, const ForwardTrace& trace,
                          std::span<const int> labels,
                          std::span<const double> class_weights, double scale,
                          Gradients& grads);

// Gradient of the mean weighted cross-entropy over the batch.
Gradients backward(const CnnModel& model, std::span<const double> inputs,
                   int batch, std::span<const int> labels,
                   std::span<const double> class_weights = {});

}  // namespace nn
}  // namespace sadsid

#endif  // SADSID_NN_MODEL_H_
