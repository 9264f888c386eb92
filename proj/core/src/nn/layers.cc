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

#include "sadsid/nn/layers.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace sadsid::nn {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMatrix = Eigen::Map<RowMatrix>;
using ConstMapMatrix = Eigen::Map<const RowMatrix>;

int conv_out_dim(int in, int mask, int stride, Padding padding) {
  if (padding == Padding::kSame) return (in + stride - 1) / stride;
  if (in < mask) return 0;
  return (in - mask) / stride + 1;
}

}  // namespace

std::string_view layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv2d: return "conv2d";
    case LayerKind::kMaxPool2d: return "maxpool2d";
    case LayerKind::kFlatten: return "flatten";
    case LayerKind::kDense: return "dense";
    case LayerKind::kSoftmaxOutput: return "softmax-output";
  }
  return "unknown";
}

LayerSpec LayerSpec::conv2d(int n_filters, int mask_h, int mask_w, int stride,
                            Padding padding, bool relu) {
  LayerSpec s;
  s.kind = LayerKind::kConv2d;
  s.n_filters = n_filters;
  s.mask_h = mask_h;
  s.mask_w = mask_w;
  s.stride = stride;
  s.padding = padding;
  s.relu = relu;
  return s;
}

LayerSpec LayerSpec::maxpool2d(int pool_h, int pool_w, int stride) {
  LayerSpec s;
  s.kind = LayerKind::kMaxPool2d;
  s.pool_h = pool_h;
  s.pool_w = pool_w;
  s.pool_stride = stride;
  return s;
}

LayerSpec LayerSpec::flatten() { return LayerSpec{}; }

LayerSpec LayerSpec::dense(int n_out, bool relu) {
  LayerSpec s;
  s.kind = LayerKind::kDense;
  s.n_out = n_out;
  s.relu = relu;
  return s;
}

LayerSpec LayerSpec::softmax_output(int n_classes) {
  LayerSpec s;
  s.kind = LayerKind::kSoftmaxOutput;
  s.n_out = n_classes;
  return s;
}

Shape3 infer_output_shape(const LayerSpec& spec, const Shape3& in) {
  switch (spec.kind) {
    case LayerKind::kConv2d:
      return {spec.n_filters,
              conv_out_dim(in.height, spec.mask_h, spec.stride, spec.padding),
              conv_out_dim(in.width, spec.mask_w, spec.stride, spec.padding)};
    case LayerKind::kMaxPool2d: {
      auto dim = [&](int n, int window) {
        return n < window ? 0 : (n - window) / spec.pool_stride + 1;
      };
      return {in.channels, dim(in.height, spec.pool_h), dim(in.width, spec.pool_w)};
    }
    case LayerKind::kFlatten:
      return {static_cast<int>(in.size()), 1, 1};
    case LayerKind::kDense:
    case LayerKind::kSoftmaxOutput:
      return {spec.n_out, 1, 1};
  }
  return in;
}

int leading_pad(int in, int out, int mask, int stride, Padding padding) {
  if (padding == Padding::kValid) return 0;
  const int total = std::max((out - 1) * stride + mask - in, 0);
  return total / 2;
}

ConvGeometry ConvGeometry::from(const LayerSpec& spec, const Shape3& in) {
  ConvGeometry g;
  g.in = in;
  g.out = infer_output_shape(spec, in);
  g.kh = spec.mask_h;
  g.kw = spec.mask_w;
  g.stride = spec.stride;
  g.pad_top = leading_pad(in.height, g.out.height, spec.mask_h, spec.stride, spec.padding);
  g.pad_left = leading_pad(in.width, g.out.width, spec.mask_w, spec.stride, spec.padding);
  return g;
}

void im2col(const double* in, const Shape3& in_shape, int kh, int kw,
            int stride, int pad_top, int pad_left, const Shape3& out_shape,
            double* col) {
  const int positions = out_shape.height * out_shape.width;
  for (int c = 0; c < in_shape.channels; ++c) {
    const double* plane = in + static_cast<size_t>(c) * in_shape.height * in_shape.width;
    for (int i = 0; i < kh; ++i) {
      for (int j = 0; j < kw; ++j) {
        double* row = col + static_cast<size_t>((c * kh + i) * kw + j) * positions;
        for (int oh = 0; oh < out_shape.height; ++oh) {
          const int ih = oh * stride + i - pad_top;
          double* dst = row + oh * out_shape.width;
          if (ih < 0 || ih >= in_shape.height) {
            std::fill(dst, dst + out_shape.width, 0.0);
            continue;
          }
          const double* src = plane + static_cast<size_t>(ih) * in_shape.width;
          for (int ow = 0; ow < out_shape.width; ++ow) {
            const int iw = ow * stride + j - pad_left;
            dst[ow] = (iw < 0 || iw >= in_shape.width) ? 0.0 : src[iw];
          }
        }
      }
    }
  }
}

void col2im(const double* col, const Shape3& in_shape, int kh, int kw,
            int stride, int pad_top, int pad_left, const Shape3& out_shape,
            double* in_grad) {
  const int positions = out_shape.height * out_shape.width;
  for (int c = 0; c < in_shape.channels; ++c) {
    double* plane = in_grad + static_cast<size_t>(c) * in_shape.height * in_shape.width;
    for (int i = 0; i < kh; ++i) {
      for (int j = 0; j < kw; ++j) {
        const double* row = col + static_cast<size_t>((c * kh + i) * kw + j) * positions;
        for (int oh = 0; oh < out_shape.height; ++oh) {
          const int ih = oh * stride + i - pad_top;
          if (ih < 0 || ih >= in_shape.height) continue;
          double* dst = plane + static_cast<size_t>(ih) * in_shape.width;
          const double* src = row + oh * out_shape.width;
          for (int ow = 0; ow < out_shape.width; ++ow) {
            const int iw = ow * stride + j - pad_left;
            if (iw >= 0 && iw < in_shape.width) dst[iw] += src[ow];
          }
        }
      }
    }
  }
}

void conv2d_forward(const ConvGeometry& g, const double* in, const double* weights,
                    const double* bias, double* out, std::vector<double>& col) {
  const int k = g.patch_size();
  const int p = g.positions();
  col.resize(static_cast<size_t>(k) * p);
  im2col(in, g.in, g.kh, g.kw, g.stride, g.pad_top, g.pad_left, g.out, col.data());
  ConstMapMatrix w(weights, g.out.channels, k);
  ConstMapMatrix patches(col.data(), k, p);
  MapMatrix y(out, g.out.channels, p);
  y.noalias() = w * patches;
  for (int f = 0; f < g.out.channels; ++f) y.row(f).array() += bias[f];
}

void conv2d_backward(const ConvGeometry& g, const double* in, const double* weights,
                     const double* out_grad, double* weight_grad, double* bias_grad,
                     double* in_grad, std::vector<double>& col) {
  const int k = g.patch_size();
  const int p = g.positions();
  col.resize(static_cast<size_t>(k) * p);
  im2col(in, g.in, g.kh, g.kw, g.stride, g.pad_top, g.pad_left, g.out, col.data());
  ConstMapMatrix dy(out_grad, g.out.channels, p);
  ConstMapMatrix patches(col.data(), k, p);
  MapMatrix dw(weight_grad, g.out.channels, k);
  dw.noalias() += dy * patches.transpose();
  // Plain loops: Eigen's vectorized reductions peel by address, which would
  // make the summation order depend on where the buffer happens to live.
  for (int f = 0; f < g.out.channels; ++f) {
    const double* row = out_grad + static_cast<size_t>(f) * p;
    double s = 0.0;
    for (int i = 0; i < p; ++i) s += row[i];
    bias_grad[f] += s;
  }
  if (in_grad != nullptr) {
    // The patch buffer is free once dw is done; reuse it for d(patches).
    MapMatrix dcol(col.data(), k, p);
    dcol.noalias() = ConstMapMatrix(weights, g.out.channels, k).transpose() * dy;
    std::fill(in_grad, in_grad + g.in.size(), 0.0);
    col2im(col.data(), g.in, g.kh, g.kw, g.stride, g.pad_top, g.pad_left, g.out, in_grad);
  }
}

void maxpool2d_forward(const double* in, const Shape3& in_shape, int pool_h,
                       int pool_w, int stride, const Shape3& out_shape,
                       double* out, int32_t* argmax) {
  const int plane = in_shape.height * in_shape.width;
  for (int c = 0; c < in_shape.channels; ++c) {
    const double* src = in + static_cast<size_t>(c) * plane;
    for (int oh = 0; oh < out_shape.height; ++oh) {
      for (int ow = 0; ow < out_shape.width; ++ow) {
        int best = (oh * stride) * in_shape.width + ow * stride;
        for (int i = 0; i < pool_h; ++i) {
          for (int j = 0; j < pool_w; ++j) {
            const int idx = (oh * stride + i) * in_shape.width + ow * stride + j;
            if (src[idx] > src[best] || (std::isnan(src[idx]) && !std::isnan(src[best]))) {
              best = idx;
            }
          }
        }
        const size_t o = (static_cast<size_t>(c) * out_shape.height + oh) * out_shape.width + ow;
        out[o] = src[best];
        argmax[o] = c * plane + best;
      }
    }
  }
}

void softmax_rows(const double* logits, int rows, int n, double* out) {
  for (int r = 0; r < rows; ++r) {
    const double* z = logits + static_cast<size_t>(r) * n;
    double* p = out + static_cast<size_t>(r) * n;
    const double peak = *std::max_element(z, z + n);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      p[i] = std::exp(z[i] - peak);
      total += p[i];
    }
    // exp underflows for logit gaps beyond ~745; keep every class
    // representable so downstream logs stay finite.
    for (int i = 0; i < n; ++i) {
      p[i] = std::max(p[i] / total, std::numeric_limits<double>::min());
    }
  }
}

}  // namespace sadsid::nn
