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
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "strada/data/clip.hpp"
#include "strada/error.hpp"
#include "strada/lane_net.hpp"
#include "strada/loss.hpp"
#include "strada/optim.hpp"
#include "strada/tensor.hpp"

namespace strada {

enum class LrSchedule { kConstant, kStep };

struct TrainConfig {
  std::size_t batch_size = 6;
  double learning_rate = 1e-3;
  OptimizerConfig optimizer;
  ClassWeights class_weights;
  std::size_t max_steps = 0;  // takes precedence over epochs when non-zero
  std::size_t epochs = 0;
  std::size_t checkpoint_every = 0;  // 0 keeps only the final checkpoint
  std::uint64_t seed = 0;
  LrSchedule lr_schedule = LrSchedule::kConstant;
  std::size_t lr_step_size = 1000;
  double lr_gamma = 0.1;
  double grad_clip = 0.0;  // global L2 norm; 0 disables

  void validate() const {
    if (batch_size == 0) throw ConfigError("train: batch size must be >= 1");
    if (!(learning_rate > 0)) throw ConfigError("train: learning rate must be positive");
    optimizer.validate();
    if (class_weights.lane < 0 || class_weights.background < 0) throw ConfigError("train: class weights must be >= 0");
    if (max_steps == 0 && epochs == 0) throw ConfigError("train: set max_steps or epochs");
    if (lr_schedule == LrSchedule::kStep && (lr_step_size == 0 || !(lr_gamma > 0))) {
      throw ConfigError("train: step schedule needs a positive step size and gamma");
    }
    if (grad_clip < 0) throw ConfigError("train: grad_clip must be >= 0");
  }

  double lr_at(std::size_t step) const {
    if (lr_schedule == LrSchedule::kConstant) return learning_rate;
    return learning_rate * std::pow(lr_gamma, static_cast<double>((step - 1) / lr_step_size));
  }
};

inline std::string to_string(LrSchedule s) { return s == LrSchedule::kConstant ? "constant" : "step"; }
inline LrSchedule parse_lr_schedule(std::string_view name) {
  if (name == "constant") return LrSchedule::kConstant;
  if (name == "step") return LrSchedule::kStep;
  throw ConfigError("unknown LR schedule '" + std::string(name) + "'");
}

template <typename T>
struct Batch {
  std::vector<Tensor<T>> frames;   // K tensors (B,3,H,W)
  std::vector<std::uint8_t> mask;  // (B,H,W)
};

template <typename T>
Batch<T> make_batch(const std::vector<data::Clip>& clips, std::span<const std::size_t> indices) {
  if (indices.empty()) throw ShapeError("make_batch: empty batch");
  const auto& first = clips.at(indices[0]);
  const std::size_t k = first.frame_count(), h = first.height, w = first.width;
  const std::size_t b = indices.size();
  Batch<T> out;
  for (std::size_t f = 0; f < k; ++f) out.frames.emplace_back(Shape{b, 3, h, w});
  out.mask.resize(b * h * w);
  for (std::size_t i = 0; i < b; ++i) {
    const auto& clip = clips.at(indices[i]);
    if (clip.frame_count() != k || clip.height != h || clip.width != w) {
      throw ShapeError("make_batch: clip " + clip.id + " does not match the batch layout");
    }
    for (std::size_t f = 0; f < k; ++f) {
      std::copy(clip.frames[f].begin(), clip.frames[f].end(), out.frames[f].values().begin() + i * 3 * h * w);
    }
    std::copy(clip.label.begin(), clip.label.end(), out.mask.begin() + i * h * w);
  }
  return out;
}

// Concatenation of per-epoch seeded permutations, cut into batches; the last
// partial batch of each epoch is kept.
inline std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch, std::uint64_t seed,
                                                           std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), 0x5eedu};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < n; i += batch) {
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(n, i + batch)));
  }
  return out;
}

struct StepRecord {
  std::size_t step = 0;
  double loss = 0;
  double lr = 0;
  double seconds = 0;  // wall clock since the run started
};

struct TrainCallbacks {
  std::function<void(const StepRecord&)> on_step;
  std::function<void(std::size_t step)> on_checkpoint;
};

template <typename T>
class Trainer {
 public:
  Trainer(LaneNet<T>& net, TrainConfig config)
      : net_(net), config_(std::move(config)), optimizer_((config_.validate(), net.parameter_tensors()), config_.optimizer) {}

  Optimizer<T>& optimizer() { return optimizer_; }
  const TrainConfig& config() const { return config_; }
  std::size_t global_step() const { return optimizer_.step_count(); }

  // One forward/backward/update on a batch; returns the loss before the update.
  double step(const Batch<T>& batch) {
    net_.set_mode(NormMode::kTrain);
    net_.zero_grad();
    const Tensor<T> logits = net_.forward(batch.frames);
    const Tensor<T> loss = cross_entropy_loss(logits, std::span<const std::uint8_t>(batch.mask), config_.class_weights);
    backward(loss);
    if (config_.grad_clip > 0) clip_gradients();
    optimizer_.step(config_.lr_at(optimizer_.step_count() + 1));
    return static_cast<double>(loss.item());
  }

  // Continues from global_step() up to the configured budget.
  std::vector<StepRecord> run(const std::vector<data::Clip>& clips, const TrainCallbacks& callbacks = {}) {
    if (clips.empty()) throw ConfigError("train: dataset is empty");
    for (const auto& c : clips) {
      if (c.frame_count() != net_.config().frames) {
        throw ShapeError("train: clip " + c.id + " has " + std::to_string(c.frame_count()) +
                         " frames, network expects K=" + std::to_string(net_.config().frames));
      }
      if (c.height != net_.config().height || c.width != net_.config().width) {
        throw ShapeError("train: clip " + c.id + " extents do not match the network input");
      }
    }
    const std::size_t per_epoch = (clips.size() + config_.batch_size - 1) / config_.batch_size;
    const std::size_t total = config_.max_steps ? config_.max_steps : config_.epochs * per_epoch;
    const auto start = std::chrono::steady_clock::now();
    std::vector<StepRecord> log;
    while (global_step() < total) {
      const std::size_t s = global_step();
      const auto batches = epoch_batches(clips.size(), config_.batch_size, config_.seed, s / per_epoch);
      const auto& idx = batches[s % per_epoch];
      const double lr = config_.lr_at(s + 1);
      const double loss = step(make_batch<T>(clips, idx));
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      log.push_back({global_step(), loss, lr, secs});
      if (callbacks.on_step) callbacks.on_step(log.back());
      if (callbacks.on_checkpoint && config_.checkpoint_every && global_step() % config_.checkpoint_every == 0 &&
          global_step() < total) {
        callbacks.on_checkpoint(global_step());
      }
    }
    return log;
  }

 private:
  void clip_gradients() {
    double sq = 0;
    for (auto& p : optimizer_.params()) {
      if (!p.has_grad()) continue;
      for (const T g : p.grad()) sq += static_cast<double>(g) * static_cast<double>(g);
    }
    const double norm = std::sqrt(sq);
    if (norm <= config_.grad_clip) return;
    const T scale = static_cast<T>(config_.grad_clip / norm);
    for (auto p : optimizer_.params()) {
      if (!p.has_grad()) continue;
      for (T& g : p.mutable_grad()) g *= scale;
    }
  }

  LaneNet<T>& net_;
  TrainConfig config_;
  Optimizer<T> optimizer_;
};

inline std::string csv_header() { return "step,loss,lr,seconds\n"; }

inline std::string csv_row(const StepRecord& r) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.3f\n", r.step, r.loss, r.lr, r.seconds);
  return buf;
}

}  // namespace strada
