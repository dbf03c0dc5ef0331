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

#include <algorithm>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "strada/data/clip.hpp"
#include "strada/lane_net.hpp"
#include "strada/metrics.hpp"
#include "strada/train.hpp"

namespace strada {

struct EvalOptions {
  std::size_t ap_samples = 100;
  Averaging averaging = Averaging::kMicro;
  std::size_t batch_size = 4;
};

// Lane iff its probability strictly exceeds background's.
template <typename T>
std::vector<std::uint8_t> argmax_mask(const Tensor<T>& probs, std::size_t item) {
  const std::size_t plane = probs.shape().plane();
  const T* base = probs.values().data() + item * 2 * plane;
  std::vector<std::uint8_t> out(plane);
  for (std::size_t i = 0; i < plane; ++i) out[i] = base[plane + i] > base[i] ? 1 : 0;
  return out;
}

template <typename T>
std::span<const T> lane_probabilities(const Tensor<T>& probs, std::size_t item) {
  const std::size_t plane = probs.shape().plane();
  return std::span<const T>(probs.values().data() + (item * 2 + 1) * plane, plane);
}

using PredictionSink = std::function<void(const data::Clip&, const std::vector<std::uint8_t>& mask)>;

// Runs the network in eval mode over every clip and aggregates the report.
template <typename T>
MetricReport evaluate_dataset(LaneNet<T>& net, const std::vector<data::Clip>& clips, const EvalOptions& opts = {},
                              const PredictionSink& sink = {}) {
  if (clips.empty()) throw ConfigError("evaluate: empty dataset");
  const NormMode saved = net.mode();
  net.set_mode(NormMode::kEval);
  MetricAccumulator acc(opts.ap_samples, opts.averaging);
  std::vector<std::size_t> idx(clips.size());
  std::iota(idx.begin(), idx.end(), 0);
  const std::size_t bs = std::max<std::size_t>(1, opts.batch_size);
  for (std::size_t start = 0; start < clips.size(); start += bs) {
    const std::size_t end = std::min(clips.size(), start + bs);
    const auto batch = make_batch<T>(clips, std::span<const std::size_t>(idx.data() + start, end - start));
    const Tensor<T> probs = net.predict_probabilities(batch.frames);
    for (std::size_t i = start; i < end; ++i) {
      const auto mask = argmax_mask(probs, i - start);
      acc.add(std::span<const std::uint8_t>(mask), lane_probabilities(probs, i - start),
              std::span<const std::uint8_t>(clips[i].label));
      if (sink) sink(clips[i], mask);
    }
  }
  net.set_mode(saved);
  return acc.report();
}

}  // namespace strada
