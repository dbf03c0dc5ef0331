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
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "strada/ops.hpp"

namespace strada {

enum class HiddenInit { kCopyInput, kZeros };

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T> tensor;
};

// Normal draws with std sqrt(2 / fan_in).
template <typename T>
Tensor<T> fan_in_normal(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
  std::vector<T> values(shape.numel());
  for (T& v : values) v = static_cast<T>(dist(rng));
  Tensor<T> t(shape, std::move(values));
  t.set_requires_grad(true);
  return t;
}

template <typename T>
Tensor<T> zero_parameter(Shape shape) {
  Tensor<T> t(shape, T(0));
  t.set_requires_grad(true);
  return t;
}

// Convolutional GRU cell. Input and hidden state share the channel count;
// every convolution is stride 1 with "same" padding, so a step keeps H and W.
template <typename T>
struct ConvGruCell {
  std::size_t channels = 0;
  std::size_t kernel = 3;
  Tensor<T> w_z, u_z, b_z;  // update gate
  Tensor<T> w_r, u_r, b_r;  // reset gate
  Tensor<T> w_h, u_h, b_h;  // candidate

  static ConvGruCell create(std::size_t channels, std::size_t kernel, std::mt19937_64& rng) {
    if (kernel % 2 == 0) throw ConfigError("ConvGruCell: kernel size must be odd");
    ConvGruCell cell;
    cell.channels = channels;
    cell.kernel = kernel;
    const Shape ks{channels, channels, kernel, kernel};
    const Shape bs{1, channels, 1, 1};
    const std::size_t fan_in = channels * kernel * kernel;
    for (Tensor<T>* k : {&cell.w_z, &cell.u_z, &cell.w_r, &cell.u_r, &cell.w_h, &cell.u_h}) {
      *k = fan_in_normal<T>(ks, fan_in, rng);
    }
    for (Tensor<T>* b : {&cell.b_z, &cell.b_r, &cell.b_h}) *b = zero_parameter<T>(bs);
    return cell;
  }

  std::size_t pad() const { return (kernel - 1) / 2; }

  // Names follow z = s(W_z*x + U_z*h + b_z), r = ..., h~ = tanh(W*x + U*(r.h) + b).
  std::vector<NamedTensor<T>> named_parameters(const std::string& prefix) const {
    return {{prefix + "W_z", w_z}, {prefix + "U_z", u_z}, {prefix + "b_z", b_z},
            {prefix + "W_r", w_r}, {prefix + "U_r", u_r}, {prefix + "b_r", b_r},
            {prefix + "W", w_h},   {prefix + "U", u_h},   {prefix + "b", b_h}};
  }
};

template <typename T>
struct GruState {
  Tensor<T> h;
  std::size_t t = 0;
};

template <typename T>
GruState<T> init_hidden(const Tensor<T>& first_input, HiddenInit policy) {
  if (policy == HiddenInit::kCopyInput) return {first_input, 0};
  return {Tensor<T>::zeros(first_input.shape()), 0};
}

// Gate activations from one step; exposed for tests of the gate invariants.
template <typename T>
struct GruStepTrace {
  Tensor<T> update;
  Tensor<T> reset;
  Tensor<T> candidate;
  Tensor<T> hidden;
};

template <typename T>
GruStepTrace<T> gru_step_traced(const ConvGruCell<T>& cell, const Tensor<T>& x,
                                const Tensor<T>& h_prev) {
  if (!(x.shape() == h_prev.shape())) {
    throw ShapeError("gru_step: input " + x.shape().str() + " vs hidden " + h_prev.shape().str());
  }
  if (x.shape().c() != cell.channels) {
    throw ShapeError("gru_step: cell has " + std::to_string(cell.channels) + " channels, input " +
                     x.shape().str());
  }
  const std::size_t p = cell.pad();
  const Tensor<T> none;
  Tensor<T> z = sigmoid(add(conv2d(x, cell.w_z, cell.b_z, 1, p), conv2d(h_prev, cell.u_z, none, 1, p)));
  Tensor<T> r = sigmoid(add(conv2d(x, cell.w_r, cell.b_r, 1, p), conv2d(h_prev, cell.u_r, none, 1, p)));
  Tensor<T> cand =
      tanh(add(conv2d(x, cell.w_h, cell.b_h, 1, p), conv2d(mul(r, h_prev), cell.u_h, none, 1, p)));
  Tensor<T> h = gated_blend(z, h_prev, cand);
  return {std::move(z), std::move(r), std::move(cand), std::move(h)};
}

template <typename T>
Tensor<T> gru_step(const ConvGruCell<T>& cell, const Tensor<T>& x, const Tensor<T>& h_prev) {
  return gru_step_traced(cell, x, h_prev).hidden;
}

// Every hidden state h^1..h^K of an unrolled sequence.
template <typename T>
std::vector<Tensor<T>> gru_sequence_states(const ConvGruCell<T>& cell, const std::vector<Tensor<T>>& xs,
                                           HiddenInit policy) {
  if (xs.empty()) throw ShapeError("gru_sequence: empty sequence");
  for (const auto& x : xs) {
    if (!(x.shape() == xs.front().shape())) throw ShapeError("gru_sequence: frames differ in shape");
  }
  GruState<T> state = init_hidden(xs.front(), policy);
  std::vector<Tensor<T>> states;
  states.reserve(xs.size());
  for (const auto& x : xs) {
    state.h = gru_step(cell, x, state.h);
    ++state.t;
    states.push_back(state.h);
  }
  return states;
}

// Runs the cell over K frames and returns only h^K.
template <typename T>
Tensor<T> gru_sequence(const ConvGruCell<T>& cell, const std::vector<Tensor<T>>& xs, HiddenInit policy) {
  return gru_sequence_states(cell, xs, policy).back();
}

}  // namespace strada
