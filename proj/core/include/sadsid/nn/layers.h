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

// Layer descriptions and the per-sample compute kernels behind them. All
// tensors are dense row-major doubles in channel, height, width order.

#ifndef SADSID_NN_LAYERS_H_
#define SADSID_NN_LAYERS_H_

#include <cstdint>
#include <string_view>
#include <vector>

namespace sadsid::nn {

enum class LayerKind : uint8_t {
  kConv2d = 1,
  kMaxPool2d = 2,
  kFlatten = 3,
  kDense = 4,
  kSoftmaxOutput = 5,
};

std::string_view layer_kind_name(LayerKind kind);

enum class Padding : uint8_t { kValid = 0, kSame = 1 };

struct Shape3 {
  int channels = 1;
  int height = 1;
  int width = 1;

  size_t size() const {
    return static_cast<size_t>(channels) * height * width;
  }
  bool operator==(const Shape3&) const = default;
};

struct LayerSpec {
  LayerKind kind = LayerKind::kFlatten;
  // kConv2d
  int n_filters = 0;
  int mask_h = 0;
  int mask_w = 0;
  int stride = 1;
  Padding padding = Padding::kValid;
  // kMaxPool2d
  int pool_h = 0;
  int pool_w = 0;
  int pool_stride = 0;
  // kDense, kSoftmaxOutput
  int n_out = 0;
  // ReLU after kConv2d / kDense
  bool relu = false;

  static LayerSpec conv2d(int n_filters, int mask_h, int mask_w, int stride = 1,
                          Padding padding = Padding::kValid, bool relu = true);
  static LayerSpec maxpool2d(int pool_h, int pool_w, int stride);
  static LayerSpec flatten();
  static LayerSpec dense(int n_out, bool relu = true);
  static LayerSpec softmax_output(int n_classes);

  bool operator==(const LayerSpec&) const = default;
};

// Output shape of `spec` applied to `in`. Dimensions may come out < 1; the
// model builder turns that into an architecture error.
Shape3 infer_output_shape(const LayerSpec& spec, const Shape3& in);

// Leading zero rows / columns added by `padding` for one spatial axis.
int leading_pad(int in, int out, int mask, int stride, Padding padding);

// Patch matrix [C*kh*kw x OH*OW] of one sample, zero outside the input.
void im2col(const double* in, const Shape3& in_shape, int kh, int kw,
            int stride, int pad_top, int pad_left, const Shape3& out_shape,
            double* col);
// Adds the patch matrix back onto the input-gradient grid.
void col2im(const double* col, const Shape3& in_shape, int kh, int kw,
            int stride, int pad_top, int pad_left, const Shape3& out_shape,
            double* in_grad);

struct ConvGeometry {
  Shape3 in;
  Shape3 out;
  int kh = 0;
  int kw = 0;
  int stride = 1;
  int pad_top = 0;
  int pad_left = 0;

  static ConvGeometry from(const LayerSpec& spec, const Shape3& in);
  int patch_size() const { return in.channels * kh * kw; }
  int positions() const { return out.height * out.width; }
};

// One sample: out[f] = bias[f] + sum over (c, i, j) of w[f][c][i][j] * patch.
// `col` is scratch of size patch_size * positions.
void conv2d_forward(const ConvGeometry& g, const double* in, const double* weights,
                    const double* bias, double* out, std::vector<double>& col);

// One sample, accumulating into weight_grad / bias_grad. in_grad may be null
// when the input gradient is not needed; otherwise it is overwritten.
void conv2d_backward(const ConvGeometry& g, const double* in, const double* weights,
                     const double* out_grad, double* weight_grad, double* bias_grad,
                     double* in_grad, std::vector<double>& col);

// One sample. argmax receives, per output element, the input index of the
// first maximum in row-major window order.
void maxpool2d_forward(const double* in, const Shape3& in_shape, int pool_h,
                       int pool_w, int stride, const Shape3& out_shape,
                       double* out, int32_t* argmax);

// Row-wise softmax with max subtraction; rows of length n.
void softmax_rows(const double* logits, int rows, int n, double* out);

}  // namespace sadsid::nn

#endif  // SADSID_NN_LAYERS_H_
