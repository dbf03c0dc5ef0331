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
#include <span>
#include <vector>

#include "strada/tensor.hpp"

namespace strada {

struct ClassWeights {
  double lane = 1.0;
  double background = 1.0;
};

// Mean over all B*H*W pixels of -w_c * log softmax(logits)[c] at the true
// class c. Channel 0 is background, channel 1 is lane; `mask` holds one 0/1
// label per pixel in (B,H,W) order.
template <typename T>
Tensor<T> cross_entropy_loss(const Tensor<T>& logits, std::span<const std::uint8_t> mask,
                             ClassWeights weights = {}) {
  const Shape& s = logits.shape();
  if (s.c() != 2) throw ShapeError("cross_entropy_loss: expected 2 channels, got " + s.str());
  const std::size_t plane = s.plane();
  const std::size_t pixels = s.n() * plane;
  if (mask.size() != pixels) throw ShapeError("cross_entropy_loss: mask size does not match logits");
  const auto& x = logits.values();
  for (const T v : x) {
    if (std::isnan(v)) throw NumericError("cross_entropy_loss: NaN logits");
  }

  std::vector<T> lane_prob(pixels);
  double total = 0.0;
  for (std::size_t n = 0; n < s.n(); ++n) {
    for (std::size_t p = 0; p < plane; ++p) {
      const std::size_t i = n * plane + p;
      const std::uint8_t label = mask[i];
      if (label > 1) throw ShapeError("cross_entropy_loss: mask values must be 0 or 1");
      const T bg = x[n * 2 * plane + p];
      const T ln = x[n * 2 * plane + plane + p];
      const T peak = std::max(bg, ln);
      const T lse = peak + std::log(std::exp(bg - peak) + std::exp(ln - peak));
      lane_prob[i] = std::exp(ln - lse);
      const double w = label ? weights.lane : weights.background;
      total += w * static_cast<double>(lse - (label ? ln : bg));
    }
  }
  const T loss = static_cast<T>(total / static_cast<double>(pixels));
  std::vector<std::uint8_t> labels(mask.begin(), mask.end());
  return make_result<T>(
      Shape{1, 1, 1, 1}, {loss}, "cross_entropy_loss", {logits},
      [s, weights, labels = std::move(labels), lane_prob = std::move(lane_prob)](TensorNode<T>& self) {
        auto& dx = self.inputs[0]->ensure_grad();
        const std::size_t plane = s.plane();
        const T scale = self.grad[0] / T(s.n() * plane);
        for (std::size_t n = 0; n < s.n(); ++n) {
          for (std::size_t p = 0; p < plane; ++p) {
            const std::size_t i = n * plane + p;
            const T w = static_cast<T>(labels[i] ? weights.lane : weights.background);
            const T q = lane_prob[i];
            // d/d(lane) = w (q - y), d/d(bg) = w ((1 - q) - (1 - y))
            const T d = w * (q - T(labels[i])) * scale;
            dx[n * 2 * plane + plane + p] += d;
            dx[n * 2 * plane + p] -= d;
          }
        }
      });
}

}  // namespace strada
