// Copyright 2026 The Strada Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "strada/detail/kernels.hpp"
#include "strada/tensor.hpp"

namespace strada {

// ---------------------------------------------------------------------------
// Convolution
// ---------------------------------------------------------------------------

// 2-D cross-correlation. `weight` is (outC, inC, k, k); `bias` is optional
// (undefined Tensor) or holds outC values.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::size_t stride = 1, std::size_t pad = 0) {
  const Shape& xs = input.shape();
  const Shape& ws = weight.shape();
  if (ws.h() != ws.w()) throw ShapeError("conv2d: kernel must be square, got " + ws.str());
  if (xs.c() != ws.c()) {
    throw ShapeError("conv2d: input has " + std::to_string(xs.c()) + " channels, weight expects " +
                     std::to_string(ws.c()));
  }
  if (bias.defined() && bias.numel() != ws.n()) throw ShapeError("conv2d: bias length mismatch");
  if (stride == 0) throw ShapeError("conv2d: stride must be positive");
  const std::size_t k = ws.h();
  if (xs.h() + 2 * pad < k || xs.w() + 2 * pad < k) {
    throw ShapeError("conv2d: non-positive output extent for input " + xs.str());
  }

  const detail::ConvGeometry g{xs.c(), xs.h(), xs.w(), k, stride, pad,
                               (xs.h() + 2 * pad - k) / stride + 1,
                               (xs.w() + 2 * pad - k) / stride + 1};
  const std::size_t out_c = ws.n();
  const Shape out_shape{xs.n(), out_c, g.out_height, g.out_width};
  const bool pointwise = k == 1 && stride == 1 && pad == 0;

  std::vector<T> out(out_shape.numel());
  detail::RowMatrix<T> cols(g.rows(), g.cols());
  const auto w_mat = detail::owned(weight.values().data(), out_c, g.rows());
  detail::RowMatrix<T> y(out_c, g.cols());
  for (std::size_t b = 0; b < xs.n(); ++b) {
    const T* image = input.values().data() + b * xs.c() * xs.plane();
    if (pointwise) {
      cols = detail::view(image, g.rows(), g.cols());
    } else {
      detail::im2col(image, g, cols.data());
    }
    y.noalias() = w_mat * cols;
    if (bias.defined()) {
      for (std::size_t o = 0; o < out_c; ++o) y.row(o).array() += bias.values()[o];
    }
    detail::store(y, out.data() + b * out_c * g.cols(), false);
  }

  return make_result<T>(
      out_shape, std::move(out), "conv2d", {input, weight, bias},
      [g, out_c, pointwise](TensorNode<T>& self) {
        TensorNode<T>* gx = grad_target(self, 0);
        TensorNode<T>* gw = grad_target(self, 1);
        TensorNode<T>* gb = grad_target(self, 2);
        const auto& x = self.inputs[0]->data;
        const auto w_mat = detail::owned(self.inputs[1]->data.data(), out_c, g.rows());
        detail::RowMatrix<T> cols(g.rows(), g.cols());
        detail::RowMatrix<T> dcols(g.rows(), g.cols());
        detail::RowMatrix<T> dw(out_c, g.rows());
        const std::size_t batch = self.shape.n();
        const std::size_t in_size = g.channels * g.height * g.width;
        for (std::size_t b = 0; b < batch; ++b) {
          const T* dy_ptr = self.grad.data() + b * out_c * g.cols();
          const auto dy = detail::owned(dy_ptr, out_c, g.cols());
          if (gw) {
            const T* image = x.data() + b * in_size;
            if (pointwise) {
              cols = detail::view(image, g.rows(), g.cols());
            } else {
              detail::im2col(image, g, cols.data());
            }
            dw.noalias() = dy * cols.transpose();
            detail::store(dw, gw->ensure_grad().data(), true);
          }
          if (gx) {
            T* dx = gx->ensure_grad().data() + b * in_size;
            dcols.noalias() = w_mat.transpose() * dy;
            if (pointwise) {
              detail::store(dcols, dx, true);
            } else {
              detail::col2im(dcols.data(), g, dx);
            }
          }
          if (gb) {
            auto& db = gb->ensure_grad();
            for (std::size_t o = 0; o < out_c; ++o) {
              T acc = T(0);
              for (std::size_t i = 0; i < g.cols(); ++i) acc += dy_ptr[o * g.cols() + i];
              db[o] += acc;
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// Pooling and resampling
// ---------------------------------------------------------------------------

// 2x2 max pooling with stride 2. Ties resolve to the first element in
// row-major window order, and the gradient goes there.
template <typename T>
Tensor<T> max_pool2d(const Tensor<T>& input) {
  const Shape& s = input.shape();
  if (s.h() % 2 != 0 || s.w() % 2 != 0) {
    throw ShapeError("max_pool2d: odd spatial extent in " + s.str());
  }
  const Shape out_shape{s.n(), s.c(), s.h() / 2, s.w() / 2};
  std::vector<T> out(out_shape.numel());
  std::vector<std::uint32_t> argmax(out_shape.numel());
  const auto& x = input.values();
  const std::size_t planes = s.n() * s.c();
  for (std::size_t p = 0; p < planes; ++p) {
    const std::size_t in_base = p * s.plane();
    const std::size_t out_base = p * out_shape.plane();
    for (std::size_t oy = 0; oy < out_shape.h(); ++oy) {
      for (std::size_t ox = 0; ox < out_shape.w(); ++ox) {
        std::size_t best = in_base + (2 * oy) * s.w() + 2 * ox;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = in_base + (2 * oy + dy) * s.w() + 2 * ox + dx;
            if (x[idx] > x[best]) best = idx;
          }
        }
        const std::size_t o = out_base + oy * out_shape.w() + ox;
        out[o] = x[best];
        argmax[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return make_result<T>(out_shape, std::move(out), "max_pool2d", {input},
                        [argmax = std::move(argmax)](TensorNode<T>& self) {
                          auto& dx = self.inputs[0]->ensure_grad();
                          for (std::size_t o = 0; o < argmax.size(); ++o) {
                            dx[argmax[o]] += self.grad[o];
                          }
                        });
}

template <typename T>
Tensor<T> upsample_nearest2x(const Tensor<T>& input) {
  const Shape& s = input.shape();
  const Shape out_shape{s.n(), s.c(), 2 * s.h(), 2 * s.w()};
  std::vector<T> out(out_shape.numel());
  const auto& x = input.values();
  const std::size_t planes = s.n() * s.c();
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t y = 0; y < out_shape.h(); ++y) {
      for (std::size_t xo = 0; xo < out_shape.w(); ++xo) {
        out[p * out_shape.plane() + y * out_shape.w() + xo] =
            x[p * s.plane() + (y / 2) * s.w() + xo / 2];
      }
    }
  }
  return make_result<T>(out_shape, std::move(out), "upsample_nearest2x", {input},
                        [s, out_shape](TensorNode<T>& self) {
                          auto& dx = self.inputs[0]->ensure_grad();
                          const std::size_t planes = s.n() * s.c();
                          for (std::size_t p = 0; p < planes; ++p) {
                            for (std::size_t y = 0; y < out_shape.h(); ++y) {
                              for (std::size_t xo = 0; xo < out_shape.w(); ++xo) {
                                dx[p * s.plane() + (y / 2) * s.w() + xo / 2] +=
                                    self.grad[p * out_shape.plane() + y * out_shape.w() + xo];
                              }
                            }
                          }
                        });
}

// Transposed convolution with a 2x2 kernel and stride 2. `weight` is
// (inC, outC, 2, 2); windows do not overlap, so each output pixel receives
// exactly one kernel tap per input channel.
template <typename T>
Tensor<T> conv_transpose2x2(const Tensor<T>& input, const Tensor<T>& weight) {
  const Shape& s = input.shape();
  const Shape& ws = weight.shape();
  if (ws.n() != s.c() || ws.h() != 2 || ws.w() != 2) {
    throw ShapeError("conv_transpose2x2: weight " + ws.str() + " does not fit input " + s.str());
  }
  const std::size_t in_c = s.c(), out_c = ws.c(), hw = s.plane();
  const Shape out_shape{s.n(), out_c, 2 * s.h(), 2 * s.w()};
  std::vector<T> out(out_shape.numel());
  detail::RowMatrix<T> taps(out_c * 4, hw);
  const auto w_mat = detail::owned(weight.values().data(), in_c, out_c * 4);
  for (std::size_t b = 0; b < s.n(); ++b) {
    const auto x = detail::owned(input.values().data() + b * in_c * hw, in_c, hw);
    taps.noalias() = w_mat.transpose() * x;
    T* y = out.data() + b * out_c * out_shape.plane();
    for (std::size_t o = 0; o < out_c; ++o) {
      for (std::size_t tap = 0; tap < 4; ++tap) {
        const T* src = taps.data() + (o * 4 + tap) * hw;
        const std::size_t di = tap / 2, dj = tap % 2;
        for (std::size_t i = 0; i < s.h(); ++i) {
          for (std::size_t j = 0; j < s.w(); ++j) {
            y[o * out_shape.plane() + (2 * i + di) * out_shape.w() + 2 * j + dj] = src[i * s.w() + j];
          }
        }
      }
    }
  }
  return make_result<T>(
      out_shape, std::move(out), "conv_transpose2x2", {input, weight},
      [s, out_shape, in_c, out_c, hw](TensorNode<T>& self) {
        TensorNode<T>* gx = grad_target(self, 0);
        TensorNode<T>* gw = grad_target(self, 1);
        detail::RowMatrix<T> dtaps(out_c * 4, hw);
        detail::RowMatrix<T> dw(in_c, out_c * 4);
        detail::RowMatrix<T> dx(in_c, hw);
        const auto w_mat = detail::owned(self.inputs[1]->data.data(), in_c, out_c * 4);
        for (std::size_t b = 0; b < s.n(); ++b) {
          const T* dy = self.grad.data() + b * out_c * out_shape.plane();
          for (std::size_t o = 0; o < out_c; ++o) {
            for (std::size_t tap = 0; tap < 4; ++tap) {
              T* dst = dtaps.data() + (o * 4 + tap) * hw;
              const std::size_t di = tap / 2, dj = tap % 2;
              for (std::size_t i = 0; i < s.h(); ++i) {
                for (std::size_t j = 0; j < s.w(); ++j) {
                  dst[i * s.w() + j] =
                      dy[o * out_shape.plane() + (2 * i + di) * out_shape.w() + 2 * j + dj];
                }
              }
            }
          }
          if (gw) {
            const auto x = detail::owned(self.inputs[0]->data.data() + b * in_c * hw, in_c, hw);
            dw.noalias() = x * dtaps.transpose();
            detail::store(dw, gw->ensure_grad().data(), true);
          }
          if (gx) {
            dx.noalias() = w_mat * dtaps;
            detail::store(dx, gx->ensure_grad().data() + b * in_c * hw, true);
          }
        }
      });
}

enum class UpsampleMode { kTransposedConv, kNearest };

template <typename T>
Tensor<T> upsample2x(const Tensor<T>& input, UpsampleMode mode, const Tensor<T>& weight = {}) {
  if (mode == UpsampleMode::kNearest) return upsample_nearest2x(input);
  if (!weight.defined()) throw ShapeError("upsample2x: transposed-conv mode needs a weight");
  return conv_transpose2x2(input, weight);
}

// ---------------------------------------------------------------------------
// Batch normalization
// ---------------------------------------------------------------------------

enum class NormMode { kTrain, kEval };

template <typename T>
struct BatchNormStats {
  std::vector<T> mean;
  std::vector<T> var;

  BatchNormStats() = default;
  explicit BatchNormStats(std::size_t channels) : mean(channels, T(0)), var(channels, T(1)) {}
};

// Per-channel normalization over (B,H,W). Train mode uses batch statistics
// and folds them into `stats` (running var is the unbiased estimate); eval
// mode is the affine map defined by `stats`.
template <typename T>
Tensor<T> batch_norm2d(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                       BatchNormStats<T>& stats, NormMode mode, T eps = T(1e-5),
                       T momentum = T(0.1)) {
  const Shape& s = input.shape();
  const std::size_t channels = s.c(), plane = s.plane(), batch = s.n();
  if (gamma.numel() != channels || beta.numel() != channels) {
    throw ShapeError("batch_norm2d: parameter length does not match " + std::to_string(channels) +
                     " channels");
  }
  if (stats.mean.size() != channels || stats.var.size() != channels) {
    throw ShapeError("batch_norm2d: running statistics are not set for this channel count");
  }
  const std::size_t count = batch * plane;
  const auto& x = input.values();
  std::vector<T> out(x.size());
  std::vector<T> inv_std(channels);
  std::vector<T> xhat(mode == NormMode::kTrain ? x.size() : 0);

  for (std::size_t c = 0; c < channels; ++c) {
    T mean, var;
    if (mode == NormMode::kTrain) {
      T acc = 0;
      for (std::size_t b = 0; b < batch; ++b) {
        const T* p = x.data() + (b * channels + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) acc += p[i];
      }
      mean = acc / T(count);
      T sq = 0;
      for (std::size_t b = 0; b < batch; ++b) {
        const T* p = x.data() + (b * channels + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) sq += (p[i] - mean) * (p[i] - mean);
      }
      var = sq / T(count);
      const T unbiased = count > 1 ? sq / T(count - 1) : var;
      stats.mean[c] = (T(1) - momentum) * stats.mean[c] + momentum * mean;
      stats.var[c] = (T(1) - momentum) * stats.var[c] + momentum * unbiased;
    } else {
      mean = stats.mean[c];
      var = stats.var[c];
    }
    inv_std[c] = T(1) / std::sqrt(var + eps);
    const T g = gamma.values()[c], bt = beta.values()[c];
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t base = (b * channels + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const T n = (x[base + i] - mean) * inv_std[c];
        if (!xhat.empty()) xhat[base + i] = n;
        out[base + i] = g * n + bt;
      }
    }
  }

  const bool train = mode == NormMode::kTrain;
  const std::vector<T> frozen_mean = train ? std::vector<T>{} : stats.mean;
  return make_result<T>(
      s, std::move(out), "batch_norm2d", {input, gamma, beta},
      [s, train, inv_std = std::move(inv_std), xhat = std::move(xhat),
       frozen_mean](TensorNode<T>& self) {
        const std::size_t channels = s.c(), plane = s.plane(), batch = s.n();
        const T count = T(batch * plane);
        TensorNode<T>* gx = grad_target(self, 0);
        TensorNode<T>* gg = grad_target(self, 1);
        TensorNode<T>* gb = grad_target(self, 2);
        const auto& x = self.inputs[0]->data;
        const auto& dy = self.grad;
        for (std::size_t c = 0; c < channels; ++c) {
          const T g = self.inputs[1]->data[c];
          T sum_dy = 0, sum_dy_xhat = 0;
          for (std::size_t b = 0; b < batch; ++b) {
            const std::size_t base = (b * channels + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
              const T n = train ? xhat[base + i] : (x[base + i] - frozen_mean[c]) * inv_std[c];
              sum_dy += dy[base + i];
              sum_dy_xhat += dy[base + i] * n;
            }
          }
          if (gg) gg->ensure_grad()[c] += sum_dy_xhat;
          if (gb) gb->ensure_grad()[c] += sum_dy;
          if (!gx) continue;
          auto& dx = gx->ensure_grad();
          for (std::size_t b = 0; b < batch; ++b) {
            const std::size_t base = (b * channels + c) * plane;
            for (std::size_t i = 0; i < plane; ++i) {
              if (train) {
                dx[base + i] += g * inv_std[c] / count *
                                (count * dy[base + i] - sum_dy - xhat[base + i] * sum_dy_xhat);
              } else {
                dx[base + i] += g * inv_std[c] * dy[base + i];
              }
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

enum class Activation { kRelu, kSigmoid, kTanh };

namespace detail {

template <typename T>
T stable_sigmoid(T v) {
  if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
  const T e = std::exp(v);
  return e / (T(1) + e);
}

inline void require_same_shape(const Shape& a, const Shape& b, const char* op) {
  if (!(a == b)) throw ShapeError(std::string(op) + ": shape " + a.str() + " vs " + b.str());
}

}  // namespace detail

template <typename T>
Tensor<T> relu(const Tensor<T>& input) {
  std::vector<T> out(input.values());
  for (T& v : out) v = v < T(0) ? T(0) : v;  // NaN propagates
  return make_result<T>(input.shape(), std::move(out), "relu", {input}, [](TensorNode<T>& self) {
    const auto& x = self.inputs[0]->data;
    auto& dx = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] > T(0)) dx[i] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& input) {
  std::vector<T> out(input.values());
  for (T& v : out) v = detail::stable_sigmoid(v);
  return make_result<T>(input.shape(), std::move(out), "sigmoid", {input},
                        [](TensorNode<T>& self) {
                          auto& dx = self.inputs[0]->ensure_grad();
                          for (std::size_t i = 0; i < dx.size(); ++i) {
                            const T y = self.data[i];
                            dx[i] += self.grad[i] * y * (T(1) - y);
                          }
                        });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& input) {
  std::vector<T> out(input.values());
  for (T& v : out) v = std::tanh(v);
  return make_result<T>(input.shape(), std::move(out), "tanh", {input}, [](TensorNode<T>& self) {
    auto& dx = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < dx.size(); ++i) {
      const T y = self.data[i];
      dx[i] += self.grad[i] * (T(1) - y * y);
    }
  });
}

template <typename T>
Tensor<T> activation(const Tensor<T>& input, Activation kind) {
  switch (kind) {
    case Activation::kRelu:
      return relu(input);
    case Activation::kSigmoid:
      return sigmoid(input);
    case Activation::kTanh:
      return tanh(input);
  }
  return relu(input);
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a.shape(), b.shape(), "add");
  std::vector<T> out(a.values());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.values()[i];
  return make_result<T>(a.shape(), std::move(out), "add", {a, b}, [](TensorNode<T>& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (TensorNode<T>* t = grad_target(self, k)) {
        auto& d = t->ensure_grad();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += self.grad[i];
      }
    }
  });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a.shape(), b.shape(), "mul");
  std::vector<T> out(a.values());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.values()[i];
  return make_result<T>(a.shape(), std::move(out), "mul", {a, b}, [](TensorNode<T>& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (TensorNode<T>* t = grad_target(self, k)) {
        const auto& other = self.inputs[1 - k]->data;
        auto& d = t->ensure_grad();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += self.grad[i] * other[i];
      }
    }
  });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  std::vector<T> out(a.values());
  for (T& v : out) v *= factor;
  return make_result<T>(a.shape(), std::move(out), "scale", {a}, [factor](TensorNode<T>& self) {
    auto& d = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += self.grad[i] * factor;
  });
}

// (1 - gate) * previous + gate * candidate, elementwise.
template <typename T>
Tensor<T> gated_blend(const Tensor<T>& gate, const Tensor<T>& previous, const Tensor<T>& candidate) {
  detail::require_same_shape(gate.shape(), previous.shape(), "gated_blend");
  detail::require_same_shape(gate.shape(), candidate.shape(), "gated_blend");
  const auto& z = gate.values();
  const auto& h = previous.values();
  const auto& c = candidate.values();
  std::vector<T> out(z.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (T(1) - z[i]) * h[i] + z[i] * c[i];
  return make_result<T>(gate.shape(), std::move(out), "gated_blend", {gate, previous, candidate},
                        [](TensorNode<T>& self) {
                          const auto& z = self.inputs[0]->data;
                          const auto& h = self.inputs[1]->data;
                          const auto& c = self.inputs[2]->data;
                          const auto& g = self.grad;
                          if (auto* t = grad_target(self, 0)) {
                            auto& d = t->ensure_grad();
                            for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * (c[i] - h[i]);
                          }
                          if (auto* t = grad_target(self, 1)) {
                            auto& d = t->ensure_grad();
                            for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * (T(1) - z[i]);
                          }
                          if (auto* t = grad_target(self, 2)) {
                            auto& d = t->ensure_grad();
                            for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * z[i];
                          }
                        });
}

// ---------------------------------------------------------------------------
// Structural
// ---------------------------------------------------------------------------

// Channel concatenation, `a`'s channels first.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.n() != sb.n() || sa.h() != sb.h() || sa.w() != sb.w()) {
    throw ShapeError("concat_channels: " + sa.str() + " vs " + sb.str());
  }
  const Shape out_shape{sa.n(), sa.c() + sb.c(), sa.h(), sa.w()};
  const std::size_t na = sa.c() * sa.plane(), nb = sb.c() * sb.plane();
  std::vector<T> out(out_shape.numel());
  for (std::size_t n = 0; n < sa.n(); ++n) {
    std::copy_n(a.values().data() + n * na, na, out.data() + n * (na + nb));
    std::copy_n(b.values().data() + n * nb, nb, out.data() + n * (na + nb) + na);
  }
  return make_result<T>(out_shape, std::move(out), "concat_channels", {a, b},
                        [na, nb](TensorNode<T>& self) {
                          const std::size_t batch = self.shape.n();
                          if (auto* t = grad_target(self, 0)) {
                            auto& d = t->ensure_grad();
                            for (std::size_t n = 0; n < batch; ++n)
                              for (std::size_t i = 0; i < na; ++i) d[n * na + i] += self.grad[n * (na + nb) + i];
                          }
                          if (auto* t = grad_target(self, 1)) {
                            auto& d = t->ensure_grad();
                            for (std::size_t n = 0; n < batch; ++n)
                              for (std::size_t i = 0; i < nb; ++i)
                                d[n * nb + i] += self.grad[n * (na + nb) + na + i];
                          }
                        });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& input) {
  T acc = 0;
  for (const T v : input.values()) acc += v;
  return make_result<T>(Shape{1, 1, 1, 1}, {acc}, "sum", {input}, [](TensorNode<T>& self) {
    auto& d = self.inputs[0]->ensure_grad();
    for (T& v : d) v += self.grad[0];
  });
}

// Softmax across the channel axis at every pixel.
template <typename T>
Tensor<T> softmax_channels(const Tensor<T>& input) {
  const Shape& s = input.shape();
  const auto& x = input.values();
  std::vector<T> out(x.size());
  const std::size_t plane = s.plane(), channels = s.c();
  for (std::size_t n = 0; n < s.n(); ++n) {
    const std::size_t base = n * channels * plane;
    for (std::size_t p = 0; p < plane; ++p) {
      T peak = -std::numeric_limits<T>::infinity();
      for (std::size_t c = 0; c < channels; ++c) peak = std::max(peak, x[base + c * plane + p]);
      T total = 0;
      for (std::size_t c = 0; c < channels; ++c) {
        total += (out[base + c * plane + p] = std::exp(x[base + c * plane + p] - peak));
      }
      for (std::size_t c = 0; c < channels; ++c) out[base + c * plane + p] /= total;
    }
  }
  return make_result<T>(s, std::move(out), "softmax_channels", {input}, [s](TensorNode<T>& self) {
    auto& dx = self.inputs[0]->ensure_grad();
    const std::size_t plane = s.plane(), channels = s.c();
    for (std::size_t n = 0; n < s.n(); ++n) {
      const std::size_t base = n * channels * plane;
      for (std::size_t p = 0; p < plane; ++p) {
        T dot = 0;
        for (std::size_t c = 0; c < channels; ++c) {
          dot += self.grad[base + c * plane + p] * self.data[base + c * plane + p];
        }
        for (std::size_t c = 0; c < channels; ++c) {
          const std::size_t i = base + c * plane + p;
          dx[i] += self.data[i] * (self.grad[i] - dot);
        }
      }
    }
  });
}

}  // namespace strada
