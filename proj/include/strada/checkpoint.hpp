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

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "strada/config_io.hpp"
#include "strada/error.hpp"
#include "strada/lane_net.hpp"
#include "strada/optim.hpp"
#include "strada/serialize.hpp"

namespace strada {

inline constexpr int kOptimizerStateVersion = 1;

// A checkpoint `stem` is three files: stem.strd (parameters and batch-norm
// statistics), stem.json (network config and step) and stem.optim.strd
// (optimizer moments, absent for inference-only saves).
struct CheckpointMeta {
  NetworkConfig network;
  std::size_t global_step = 0;
  int optimizer_state_version = kOptimizerStateVersion;
  std::string optimizer = "none";
  std::string precision = "f32";
};

inline std::string checkpoint_file(const std::string& stem, const char* suffix) { return stem + suffix; }

inline Json to_json(const CheckpointMeta& m) {
  Json j;
  j["network"] = to_json(m.network);
  j["global_step"] = m.global_step;
  j["optimizer_state_version"] = m.optimizer_state_version;
  j["optimizer"] = m.optimizer;
  j["precision"] = m.precision;
  return j;
}

inline CheckpointMeta read_checkpoint_meta(const std::string& stem) {
  const std::string path = checkpoint_file(stem, ".json");
  std::ifstream in(path);
  if (!in) throw IoError("checkpoint not found: " + path);
  try {
    const Json j = Json::parse(in);
    CheckpointMeta m;
    m.network = network_config_from_json(j.at("network"));
    m.global_step = j.at("global_step").get<std::size_t>();
    m.optimizer_state_version = j.at("optimizer_state_version").get<int>();
    m.optimizer = j.value("optimizer", std::string("none"));
    m.precision = j.value("precision", std::string("f32"));
    if (m.optimizer_state_version != kOptimizerStateVersion) {
      throw IoError("checkpoint " + path + ": unsupported optimizer state version");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("checkpoint " + path + ": " + e.what());
  }
}

template <typename T>
void save_checkpoint(const std::string& stem, const LaneNet<T>& net, const Optimizer<T>* optimizer) {
  const auto parent = std::filesystem::path(stem).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  save_container(checkpoint_file(stem, ".strd"), net.state_entries());
  CheckpointMeta meta;
  meta.network = net.config();
  meta.precision = dtype_of<T>() == DType::kF32 ? "f32" : "f64";
  if (optimizer) {
    meta.global_step = optimizer->step_count();
    meta.optimizer = to_string(optimizer->config().kind);
    const auto params = net.parameters();
    std::vector<ContainerEntry> moments;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const Shape s = params[i].tensor.shape();
      moments.push_back(make_entry("m." + params[i].name, s, optimizer->first_moment(i)));
      if (!optimizer->second_moment(i).empty()) {
        moments.push_back(make_entry("v." + params[i].name, s, optimizer->second_moment(i)));
      }
    }
    save_container(checkpoint_file(stem, ".optim.strd"), moments);
  }
  std::ofstream out(checkpoint_file(stem, ".json"), std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + stem);
  out << to_json(meta).dump(2) << "\n";
}

template <typename T>
LaneNet<T> load_network(const std::string& stem) {
  const CheckpointMeta meta = read_checkpoint_meta(stem);
  LaneNet<T> net = LaneNet<T>::build(meta.network);
  net.load_state(load_container(checkpoint_file(stem, ".strd")));
  return net;
}

// Restores moments and the step counter written by save_checkpoint.
template <typename T>
void load_optimizer_state(const std::string& stem, const LaneNet<T>& net, Optimizer<T>& optimizer) {
  const CheckpointMeta meta = read_checkpoint_meta(stem);
  const auto entries = load_container(checkpoint_file(stem, ".optim.strd"));
  std::map<std::string, const ContainerEntry*> by_name;
  for (const auto& e : entries) by_name[e.name] = &e;
  const auto params = net.parameters();
  auto restore = [&](const std::string& name, const Shape& s, std::vector<double>& dst) {
    auto it = by_name.find(name);
    if (it == by_name.end() || !(it->second->shape == s)) throw IoError("optimizer state: bad or missing " + name);
    dst = it->second->values;
  };
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Shape s = params[i].tensor.shape();
    restore("m." + params[i].name, s, optimizer.first_moment(i));
    if (!optimizer.second_moment(i).empty()) restore("v." + params[i].name, s, optimizer.second_moment(i));
  }
  optimizer.set_step_count(meta.global_step);
}

}  // namespace strada
