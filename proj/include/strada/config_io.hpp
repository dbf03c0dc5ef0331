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

#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "strada/error.hpp"
#include "strada/network_config.hpp"
#include "strada/optim.hpp"
#include "strada/train.hpp"

namespace strada {

using Json = nlohmann::ordered_json;

inline void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

inline Json to_json(const NetworkConfig& c) {
  Json j;
  j["frames"] = c.frames;
  j["height"] = c.height;
  j["width"] = c.width;
  j["channels"] = c.channels;
  j["fcgru_location"] = to_string(c.fcgru_location);
  j["mcgru_enabled"] = c.mcgru_enabled;
  j["mcgru_depth"] = c.mcgru_depth;
  j["upsample"] = to_string(c.upsample);
  j["hidden_init"] = to_string(c.hidden_init);
  j["skip_from_fcgru"] = c.skip_from_fcgru;
  j["gru_kernel"] = c.gru_kernel;
  j["head_bias_init"] = c.head_bias_init;
  j["seed"] = c.seed;
  return j;
}

inline NetworkConfig network_config_from_json(const Json& j, NetworkConfig c = {}) {
  check_keys(j, {"frames", "height", "width", "channels", "channel_divisor", "fcgru_location", "mcgru_enabled",
                 "mcgru_depth", "upsample", "hidden_init", "skip_from_fcgru", "gru_kernel", "head_bias_init", "seed"},
             "network config");
  try {
    if (j.contains("channel_divisor")) c = c.with_width_divisor(j.at("channel_divisor").get<std::size_t>());
    if (j.contains("channels")) c.channels = j.at("channels").get<std::array<std::size_t, 19>>();
    c.frames = j.value("frames", c.frames);
    c.height = j.value("height", c.height);
    c.width = j.value("width", c.width);
    if (j.contains("fcgru_location")) c.fcgru_location = parse_fcgru_location(j.at("fcgru_location").get<std::string>());
    c.mcgru_enabled = j.value("mcgru_enabled", c.mcgru_enabled);
    c.mcgru_depth = j.value("mcgru_depth", c.mcgru_depth);
    if (j.contains("upsample")) c.upsample = parse_upsample_mode(j.at("upsample").get<std::string>());
    if (j.contains("hidden_init")) c.hidden_init = parse_hidden_init(j.at("hidden_init").get<std::string>());
    c.skip_from_fcgru = j.value("skip_from_fcgru", c.skip_from_fcgru);
    c.gru_kernel = j.value("gru_kernel", c.gru_kernel);
    c.head_bias_init = j.value("head_bias_init", c.head_bias_init);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("network config: ") + e.what());
  }
  return c;
}

inline Json to_json(const TrainConfig& c) {
  Json j;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["optimizer"] = to_string(c.optimizer.kind);
  j["beta1"] = c.optimizer.beta1;
  j["beta2"] = c.optimizer.beta2;
  j["eps"] = c.optimizer.eps;
  j["momentum"] = c.optimizer.momentum;
  j["weight_decay"] = c.optimizer.weight_decay;
  j["class_weights"] = {c.class_weights.lane, c.class_weights.background};
  j["max_steps"] = c.max_steps;
  j["epochs"] = c.epochs;
  j["checkpoint_every"] = c.checkpoint_every;
  j["seed"] = c.seed;
  j["lr_schedule"] = to_string(c.lr_schedule);
  j["lr_step_size"] = c.lr_step_size;
  j["lr_gamma"] = c.lr_gamma;
  j["grad_clip"] = c.grad_clip;
  return j;
}

inline TrainConfig train_config_from_json(const Json& j, TrainConfig c = {}) {
  check_keys(j, {"batch_size", "learning_rate", "optimizer", "beta1", "beta2", "eps", "momentum", "weight_decay",
                 "class_weights", "max_steps", "epochs", "checkpoint_every", "seed", "lr_schedule", "lr_step_size",
                 "lr_gamma", "grad_clip"},
             "train config");
  try {
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    if (j.contains("optimizer")) c.optimizer.kind = parse_optimizer_kind(j.at("optimizer").get<std::string>());
    c.optimizer.beta1 = j.value("beta1", c.optimizer.beta1);
    c.optimizer.beta2 = j.value("beta2", c.optimizer.beta2);
    c.optimizer.eps = j.value("eps", c.optimizer.eps);
    c.optimizer.momentum = j.value("momentum", c.optimizer.momentum);
    c.optimizer.weight_decay = j.value("weight_decay", c.optimizer.weight_decay);
    if (j.contains("class_weights")) {
      const auto& w = j.at("class_weights");
      if (!w.is_array() || w.size() != 2) throw ConfigError("train config: class_weights must be [lane, background]");
      c.class_weights = {w[0].get<double>(), w[1].get<double>()};
    }
    c.max_steps = j.value("max_steps", c.max_steps);
    c.epochs = j.value("epochs", c.epochs);
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    c.seed = j.value("seed", c.seed);
    if (j.contains("lr_schedule")) c.lr_schedule = parse_lr_schedule(j.at("lr_schedule").get<std::string>());
    c.lr_step_size = j.value("lr_step_size", c.lr_step_size);
    c.lr_gamma = j.value("lr_gamma", c.lr_gamma);
    c.grad_clip = j.value("grad_clip", c.grad_clip);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  return c;
}

}  // namespace strada
