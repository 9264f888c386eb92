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

#include "sadsid/nn/model.h"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "sadsid/error.h"
#include "sadsid/rng.h"

namespace sadsid {

std::string_view task_name(Task task) {
  return task == Task::kSad ? "sad" : "sid";
}

Task parse_task(std::string_view text) {
  if (text == "sad") return Task::kSad;
  if (text == "sid") return Task::kSid;
  throw Error(ErrorKind::kConfig, "task must be sad or sid, got '" +
                                      std::string(text) + "'");
}

namespace nn {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMatrix = Eigen::Map<RowMatrix>;
using ConstMapMatrix = Eigen::Map<const RowMatrix>;

std::string shape_text(const Shape3& s) {
  return std::to_string(s.height) + "x" + std::to_string(s.width) + "x" +
         std::to_string(s.channels);
}

void check_spec(const LayerSpec& spec, int index) {
  auto fail = [&](const std::string& what) {
    throw Error(ErrorKind::kArchitecture,
                "layer " + std::to_string(index) + " (" +
                    std::string(layer_kind_name(spec.kind)) + "): " + what);
  };
  switch (spec.kind) {
    case LayerKind::kConv2d:
      if (spec.n_filters < 1 || spec.mask_h < 1 || spec.mask_w < 1 || spec.stride < 1) {
        fail("filters, mask and stride must be >= 1");
      }
      break;
    case LayerKind::kMaxPool2d:
      if (spec.pool_h < 1 || spec.pool_w < 1 || spec.pool_stride < 1) {
        fail("window and stride must be >= 1");
      }
      break;
    case LayerKind::kDense:
    case LayerKind::kSoftmaxOutput:
      if (spec.n_out < 1) fail("n_out must be >= 1");
      break;
    case LayerKind::kFlatten:
      break;
  }
}

// NaN passes through so a diverged input still surfaces as a non-finite loss.
void apply_relu(std::vector<double>& values) {
  for (double& v : values) v = v < 0.0 ? 0.0 : v;
}

void mask_relu(const std::vector<double>& outputs, std::vector<double>& delta) {
  for (size_t i = 0; i < delta.size(); ++i) {
    if (!(outputs[i] > 0.0)) delta[i] = 0.0;
  }
}

void check_labels(std::span<const int> labels, int n_classes) {
  for (int y : labels) {
    if (y < 0 || y >= n_classes) {
      throw Error(ErrorKind::kLabel, "label index " + std::to_string(y) +
                                         " outside [0, " +
                                         std::to_string(n_classes) + ")");
    }
  }
}

double class_weight(std::span<const double> weights, int y) {
  return weights.empty() ? 1.0 : weights[y];
}

}  // namespace

std::vector<std::span<double>> CnnModel::parameters() {
  std::vector<std::span<double>> out;
  for (Layer& layer : layers) {
    if (!layer.has_parameters()) continue;
    out.emplace_back(layer.weights);
    out.emplace_back(layer.bias);
  }
  return out;
}

std::vector<std::span<const double>> CnnModel::parameters() const {
  std::vector<std::span<const double>> out;
  for (const Layer& layer : layers) {
    if (!layer.has_parameters()) continue;
    out.emplace_back(layer.weights);
    out.emplace_back(layer.bias);
  }
  return out;
}

std::vector<std::string> CnnModel::parameter_names() const {
  std::vector<std::string> out;
  for (size_t l = 0; l < layers.size(); ++l) {
    if (!layers[l].has_parameters()) continue;
    const std::string prefix = "layer" + std::to_string(l + 1) + "." +
                               std::string(layer_kind_name(layers[l].spec.kind));
    out.push_back(prefix + ".weight");
    out.push_back(prefix + ".bias");
  }
  return out;
}

size_t CnnModel::parameter_count() const {
  size_t n = 0;
  for (const auto& p : parameters()) n += p.size();
  return n;
}

CnnModel build_model(int input_frames, int input_mels,
                     const std::vector<LayerSpec>& specs) {
  if (specs.empty() || specs.back().kind != LayerKind::kSoftmaxOutput) {
    throw Error(ErrorKind::kArchitecture, "last layer must be softmax-output");
  }
  CnnModel model;
  model.input_frames = input_frames;
  model.input_mels = input_mels;
  Shape3 shape{1, input_frames, input_mels};
  if (input_frames < 1 || input_mels < 1) {
    throw Error(ErrorKind::kArchitecture, "input geometry " + shape_text(shape) +
                                              " is empty");
  }
  for (size_t i = 0; i < specs.size(); ++i) {
    const int index = static_cast<int>(i) + 1;
    check_spec(specs[i], index);
    Layer layer;
    layer.spec = specs[i];
    layer.input = shape;
    layer.output = infer_output_shape(specs[i], shape);
    if (layer.output.channels < 1 || layer.output.height < 1 || layer.output.width < 1) {
      throw Error(ErrorKind::kArchitecture,
                  "layer " + std::to_string(index) + " (" +
                      std::string(layer_kind_name(specs[i].kind)) +
                      "): input " + shape_text(shape) + " is smaller than its window");
    }
    if (specs[i].kind == LayerKind::kSoftmaxOutput && i + 1 != specs.size()) {
      throw Error(ErrorKind::kArchitecture,
                  "layer " + std::to_string(index) + ": softmax-output must be last");
    }
    switch (specs[i].kind) {
      case LayerKind::kConv2d:
        layer.weights.assign(static_cast<size_t>(specs[i].n_filters) * shape.channels *
                                 specs[i].mask_h * specs[i].mask_w, 0.0);
        layer.bias.assign(specs[i].n_filters, 0.0);
        break;
      case LayerKind::kDense:
      case LayerKind::kSoftmaxOutput:
        layer.weights.assign(static_cast<size_t>(specs[i].n_out) * shape.size(), 0.0);
        layer.bias.assign(specs[i].n_out, 0.0);
        break;
      default:
        break;
    }
    shape = layer.output;
    model.layers.push_back(std::move(layer));
  }
  return model;
}

void initialize_he_uniform(CnnModel& model, uint64_t seed) {
  Rng rng(seed);
  for (Layer& layer : model.layers) {
    if (!layer.has_parameters()) continue;
    const size_t fan_in = layer.weights.size() / layer.bias.size();
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (double& w : layer.weights) w = rng.uniform(-limit, limit);
    std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
  }
}

CnnModel build_architecture(Task task, int input_frames, int input_mels,
                            std::vector<std::string> class_labels, uint64_t seed) {
  const int n_classes = static_cast<int>(class_labels.size());
  if (n_classes < 2) {
    throw Error(ErrorKind::kArchitecture, "need at least two classes");
  }
  const std::vector<LayerSpec> specs = {
      LayerSpec::conv2d(32, 5, 5),
      LayerSpec::maxpool2d(3, 3, 3),
      LayerSpec::conv2d(32, 5, 5),
      LayerSpec::flatten(),
      LayerSpec::dense(task == Task::kSad ? 64 : 500),
      LayerSpec::softmax_output(n_classes),
  };
  CnnModel model = build_model(input_frames, input_mels, specs);
  model.task = task;
  model.class_labels = std::move(class_labels);
  model.feature_config = task == Task::kSad ? FeatureConfig::sad() : FeatureConfig::sid();
  initialize_he_uniform(model, seed);
  return model;
}

void forward_trace(const CnnModel& model, std::span<const double> inputs,
                   int batch, ForwardTrace& trace) {
  if (batch < 1 || inputs.size() != static_cast<size_t>(batch) * model.input_size()) {
    throw Error(ErrorKind::kShape,
                "forward: expected " + std::to_string(batch) + " x " +
                    std::to_string(model.input_frames) + "x" +
                    std::to_string(model.input_mels) + " inputs, got " +
                    std::to_string(inputs.size()) + " values");
  }
  const size_t n_layers = model.layers.size();
  trace.batch = batch;
  trace.input = inputs;
  trace.outputs.resize(n_layers);
  trace.argmax.resize(n_layers);

  for (size_t l = 0; l < n_layers; ++l) {
    const Layer& layer = model.layers[l];
    const double* in = l == 0 ? inputs.data() : trace.outputs[l - 1].data();
    const size_t in_size = layer.input.size();
    const size_t out_size = layer.output.size();
    std::vector<double>& out = trace.outputs[l];
    out.resize(static_cast<size_t>(batch) * out_size);

    switch (layer.spec.kind) {
      case LayerKind::kConv2d: {
        const ConvGeometry g = ConvGeometry::from(layer.spec, layer.input);
        for (int b = 0; b < batch; ++b) {
          conv2d_forward(g, in + b * in_size, layer.weights.data(), layer.bias.data(),
                         out.data() + b * out_size, trace.col);
        }
        if (layer.spec.relu) apply_relu(out);
        break;
      }
      case LayerKind::kMaxPool2d: {
        trace.argmax[l].resize(out.size());
        for (int b = 0; b < batch; ++b) {
          maxpool2d_forward(in + b * in_size, layer.input, layer.spec.pool_h,
                            layer.spec.pool_w, layer.spec.pool_stride, layer.output,
                            out.data() + b * out_size, trace.argmax[l].data() + b * out_size);
        }
        break;
      }
      case LayerKind::kFlatten:
        std::memcpy(out.data(), in, out.size() * sizeof(double));
        break;
      case LayerKind::kDense:
      case LayerKind::kSoftmaxOutput: {
        ConstMapMatrix x(in, batch, static_cast<Eigen::Index>(in_size));
        ConstMapMatrix w(layer.weights.data(), static_cast<Eigen::Index>(out_size),
                         static_cast<Eigen::Index>(in_size));
        MapMatrix y(out.data(), batch, static_cast<Eigen::Index>(out_size));
        y.noalias() = x * w.transpose();
        y.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(layer.bias.data(),
                                                            static_cast<Eigen::Index>(out_size));
        if (layer.spec.kind == LayerKind::kSoftmaxOutput) {
          softmax_rows(out.data(), batch, static_cast<int>(out_size), out.data());
        } else if (layer.spec.relu) {
          apply_relu(out);
        }
        break;
      }
    }
  }
}

Matrix forward(const CnnModel& model, std::span<const double> inputs, int batch) {
  ForwardTrace trace;
  forward_trace(model, inputs, batch, trace);
  const int n = model.n_classes();
  Matrix out(batch, n);
  std::memcpy(out.data(), trace.posteriors().data(), out.size() * sizeof(double));
  return out;
}

double cross_entropy(std::span<const double> posteriors, int n_classes,
                     std::span<const int> labels,
                     std::span<const double> class_weights) {
  check_labels(labels, n_classes);
  if (posteriors.size() != labels.size() * n_classes) {
    throw Error(ErrorKind::kShape, "cross_entropy: posteriors / labels mismatch");
  }
  if (labels.empty()) return 0.0;
  double total = 0.0;
  for (size_t i = 0; i < labels.size(); ++i) {
    const double p = std::max(posteriors[i * n_classes + labels[i]], 1e-12);
    total += -class_weight(class_weights, labels[i]) * std::log(p);
  }
  return total / static_cast<double>(labels.size());
}

double cross_entropy(const Matrix& posteriors, std::span<const int> labels,
                     std::span<const double> class_weights) {
  return cross_entropy(std::span(posteriors.data(), static_cast<size_t>(posteriors.size())),
                       static_cast<int>(posteriors.cols()), labels, class_weights);
}

Gradients Gradients::zeros_like(const CnnModel& model) {
  Gradients g;
  for (const auto& p : model.parameters()) g.tensors.emplace_back(p.size(), 0.0);
  return g;
}

void Gradients::set_zero() {
  for (auto& t : tensors) std::fill(t.begin(), t.end(), 0.0);
}

void Gradients::add(const Gradients& other) {
  for (size_t i = 0; i < tensors.size(); ++i) {
    for (size_t j = 0; j < tensors[i].size(); ++j) tensors[i][j] += other.tensors[i][j];
  }
}

void accumulate_gradients(const CnnModel& model, const ForwardTrace& trace,
                          std::span<const int> labels,
                          std::span<const double> class_weights, double scale,
                          Gradients& grads) {
  const int batch = trace.batch;
  const int n_classes = model.n_classes();
  if (labels.size() != static_cast<size_t>(batch)) {
    throw Error(ErrorKind::kShape, "backward: label count differs from batch");
  }
  check_labels(labels, n_classes);

  // Parameter tensor index of each layer's weight.
  std::vector<int> first_param(model.layers.size(), -1);
  for (size_t l = 0, k = 0; l < model.layers.size(); ++l) {
    if (model.layers[l].has_parameters()) {
      first_param[l] = static_cast<int>(k);
      k += 2;
    }
  }

  std::vector<double> delta(trace.posteriors());
  for (int b = 0; b < batch; ++b) {
    const double w = scale * class_weight(class_weights, labels[b]);
    double* row = delta.data() + static_cast<size_t>(b) * n_classes;
    row[labels[b]] -= 1.0;
    for (int c = 0; c < n_classes; ++c) row[c] *= w;
  }

  std::vector<double> in_delta;
  std::vector<double> col;
  for (size_t l = model.layers.size(); l-- > 0;) {
    const Layer& layer = model.layers[l];
    const double* in = l == 0 ? trace.input.data() : trace.outputs[l - 1].data();
    const size_t in_size = layer.input.size();
    const size_t out_size = layer.output.size();
    const bool need_in_grad = l > 0;
    if (need_in_grad) in_delta.assign(static_cast<size_t>(batch) * in_size, 0.0);

    switch (layer.spec.kind) {
      case LayerKind::kConv2d: {
        if (layer.spec.relu) mask_relu(trace.outputs[l], delta);
        const ConvGeometry g = ConvGeometry::from(layer.spec, layer.input);
        auto& dw = grads.tensors[first_param[l]];
        auto& db = grads.tensors[first_param[l] + 1];
        for (int b = 0; b < batch; ++b) {
          conv2d_backward(g, in + b * in_size, layer.weights.data(),
                          delta.data() + b * out_size, dw.data(), db.data(),
                          need_in_grad ? in_delta.data() + b * in_size : nullptr, col);
        }
        break;
      }
      case LayerKind::kMaxPool2d: {
        const auto& argmax = trace.argmax[l];
        for (int b = 0; b < batch; ++b) {
          double* dst = in_delta.data() + b * in_size;
          const double* src = delta.data() + b * out_size;
          const int32_t* idx = argmax.data() + b * out_size;
          for (size_t o = 0; o < out_size; ++o) dst[idx[o]] += src[o];
        }
        break;
      }
      case LayerKind::kFlatten:
        in_delta = delta;
        break;
      case LayerKind::kDense:
      case LayerKind::kSoftmaxOutput: {
        if (layer.spec.kind == LayerKind::kDense && layer.spec.relu) {
          mask_relu(trace.outputs[l], delta);
        }
        const auto rows = static_cast<Eigen::Index>(out_size);
        const auto cols = static_cast<Eigen::Index>(in_size);
        ConstMapMatrix x(in, batch, cols);
        ConstMapMatrix dy(delta.data(), batch, rows);
        MapMatrix dw(grads.tensors[first_param[l]].data(), rows, cols);
        dw.noalias() += dy.transpose() * x;
        double* db = grads.tensors[first_param[l] + 1].data();
        for (int i = 0; i < batch; ++i) {
          const double* row = delta.data() + static_cast<size_t>(i) * out_size;
          for (Eigen::Index o = 0; o < rows; ++o) db[o] += row[o];
        }
        if (need_in_grad) {
          MapMatrix dx(in_delta.data(), batch, cols);
          dx.noalias() = dy * ConstMapMatrix(layer.weights.data(), rows, cols);
        }
        break;
      }
    }
    if (need_in_grad) delta.swap(in_delta);
  }
}

Gradients backward(const CnnModel& model, std::span<const double> inputs,
                   int batch, std::span<const int> labels,
                   std::span<const double> class_weights) {
  ForwardTrace trace;
  forward_trace(model, inputs, batch, trace);
  Gradients grads = Gradients::zeros_like(model);
  accumulate_gradients(model, trace, labels, class_weights, 1.0 / batch, grads);
  return grads;
}

}  // namespace nn
}  // namespace sadsid
