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

#include <array>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "strada/convgru.hpp"
#include "strada/network_config.hpp"
#include "strada/ops.hpp"
#include "strada/serialize.hpp"

namespace strada {

// One (layer, input shape, output shape) row of a forward pass.
struct ShapeRow {
  std::string layer;
  Shape input;
  Shape output;
};
using ShapeTrace = std::vector<ShapeRow>;

// conv -> [batch norm] -> ReLU
template <typename T>
struct ConvUnit {
  Tensor<T> weight;
  Tensor<T> bias;  // only without batch norm
  Tensor<T> gamma, beta;
  BatchNormStats<T> stats;
  bool normalized = true;

  static ConvUnit create(std::size_t in_c, std::size_t out_c, bool normalized, std::mt19937_64& rng,
                         T bias_init = T(0)) {
    ConvUnit u;
    u.normalized = normalized;
    u.weight = fan_in_normal<T>(Shape{out_c, in_c, 3, 3}, in_c * 9, rng);
    if (normalized) {
      u.gamma = Tensor<T>(Shape{1, out_c, 1, 1}, T(1)).set_requires_grad(true);
      u.beta = zero_parameter<T>(Shape{1, out_c, 1, 1});
      u.stats = BatchNormStats<T>(out_c);
    } else {
      u.bias = Tensor<T>(Shape{1, out_c, 1, 1}, bias_init).set_requires_grad(true);
    }
    return u;
  }

  Tensor<T> operator()(const Tensor<T>& x, NormMode mode) {
    Tensor<T> y = conv2d(x, weight, bias, 1, 1);
    if (normalized) y = batch_norm2d(y, gamma, beta, stats, mode);
    return relu(y);
  }

  void collect(const std::string& prefix, std::vector<NamedTensor<T>>& out) const {
    out.push_back({prefix + ".weight", weight});
    if (normalized) {
      out.push_back({prefix + ".gamma", gamma});
      out.push_back({prefix + ".beta", beta});
    } else {
      out.push_back({prefix + ".bias", bias});
    }
  }
};

template <typename T>
struct EncoderOutput {
  // Skip sources for levels 1..4 (index 0 = full resolution).
  std::array<Tensor<T>, 4> skips;
  Tensor<T> bottleneck;
};

// The double-ConvGRU encoder-decoder: five conv blocks with an optional
// front GRU after one of them, an optional middle GRU unrolled over the K
// bottlenecks, and four upsample+skip decoder stages ahead of a 2-channel head.
template <typename T>
class LaneNet {
 public:
  static LaneNet build(const NetworkConfig& config) {
    config.validate();
    LaneNet net;
    net.config_ = config;
    const auto& ch = config.channels;
    const int fc_level = static_cast<int>(config.fcgru_location);

    std::size_t in_c = 3;
    for (std::size_t level = 1; level <= 5; ++level) {
      auto rng = module_rng(config.seed, level);
      auto& block = net.encoder_[level - 1];
      block[0] = ConvUnit<T>::create(in_c, ch[2 * (level - 1)], true, rng);
      block[1] = ConvUnit<T>::create(ch[2 * (level - 1)], ch[2 * (level - 1) + 1], true, rng);
      in_c = ch[2 * (level - 1) + 1];
      if (static_cast<int>(level) == fc_level) {
        auto gru_rng = module_rng(config.seed, 10);
        net.fcgru_ = ConvGruCell<T>::create(in_c, config.gru_kernel, gru_rng);
        in_c *= 2;
      }
    }
    const std::size_t bottleneck_c = in_c;
    if (config.mcgru_enabled) {
      for (std::size_t d = 0; d < config.mcgru_depth; ++d) {
        auto rng = module_rng(config.seed, 20 + d);
        net.mcgru_.push_back(ConvGruCell<T>::create(bottleneck_c, config.gru_kernel, rng));
      }
    }

    std::size_t up_c = bottleneck_c;
    for (std::size_t stage = 0; stage < 4; ++stage) {
      auto rng = module_rng(config.seed, 6 + stage + 100);
      auto& dec = net.decoder_[stage];
      if (config.upsample == UpsampleMode::kTransposedConv) {
        dec.up_weight = fan_in_normal<T>(Shape{up_c, up_c, 2, 2}, up_c, rng);
      }
      const std::size_t skip_level = 4 - stage;
      const std::size_t in = up_c + config.encoder_out(skip_level);
      dec.first = ConvUnit<T>::create(in, ch[10 + 2 * stage], true, rng);
      dec.second = ConvUnit<T>::create(ch[10 + 2 * stage], ch[11 + 2 * stage], true, rng);
      up_c = ch[11 + 2 * stage];
    }
    auto head_rng = module_rng(config.seed, 200);
    net.head_ = ConvUnit<T>::create(up_c, ch[18], false, head_rng, static_cast<T>(config.head_bias_init));
    return net;
  }

  const NetworkConfig& config() const { return config_; }
  const std::optional<ConvGruCell<T>>& fcgru() const { return fcgru_; }
  const std::vector<ConvGruCell<T>>& mcgru() const { return mcgru_; }
  NormMode mode() const { return mode_; }
  void set_mode(NormMode mode) { mode_ = mode; }

  // Runs conv1..conv5 on one frame (B,3,H,W).
  EncoderOutput<T> encode_frame(const Tensor<T>& frame, ShapeTrace* trace = nullptr) {
    const Shape& s = frame.shape();
    if (s.c() != 3 || s.h() != config_.height || s.w() != config_.width) {
      throw ShapeError("encode_frame: frame " + s.str() + " does not match configured (B,3," +
                       std::to_string(config_.height) + "," + std::to_string(config_.width) + ")");
    }
    EncoderOutput<T> out;
    Tensor<T> x = frame;
    const int fc_level = static_cast<int>(config_.fcgru_location);
    for (std::size_t level = 1; level <= 5; ++level) {
      if (level > 1) x = traced("Maxpool2d", x, trace, [&](const Tensor<T>& v) { return max_pool2d(v); });
      auto& block = encoder_[level - 1];
      const std::string base = "conv" + std::to_string(level);
      x = traced(base + "_1", x, trace, [&](const Tensor<T>& v) { return block[0](v, mode_); });
      x = traced(base + "_2", x, trace, [&](const Tensor<T>& v) { return block[1](v, mode_); });
      Tensor<T> skip = x;
      if (static_cast<int>(level) == fc_level) {
        const Tensor<T> features = x;
        Tensor<T> g = traced("FCGRU", features, trace, [&](const Tensor<T>& v) {
          return gru_step(*fcgru_, v, init_hidden(v, config_.hidden_init).h);
        });
        if (config_.skip_from_fcgru) skip = g;
        x = concat_channels(features, g);
        if (trace) trace->push_back({"FCGRU concat", features.shape(), x.shape()});
      }
      if (level <= 4) out.skips[level - 1] = skip;
    }
    out.bottleneck = x;
    return out;
  }

  // Logits (B,2,H,W) for the K-th frame of a K-frame clip.
  Tensor<T> forward(const std::vector<Tensor<T>>& clip, ShapeTrace* trace = nullptr) {
    if (clip.size() != config_.frames) {
      throw ShapeError("forward: clip has " + std::to_string(clip.size()) + " frames, network expects K=" +
                       std::to_string(config_.frames));
    }
    for (const auto& f : clip) {
      if (!(f.shape() == clip.front().shape())) throw ShapeError("forward: frames differ in shape");
    }
    Tensor<T> state;
    std::array<Tensor<T>, 4> skips;
    if (mcgru_.empty()) {
      auto enc = encode_frame(clip.back(), trace);
      skips = enc.skips;
      state = enc.bottleneck;
    } else {
      std::vector<Tensor<T>> sequence;
      sequence.reserve(clip.size());
      for (std::size_t k = 0; k < clip.size(); ++k) {
        const bool last = k + 1 == clip.size();
        auto enc = encode_frame(clip[k], last ? trace : nullptr);
        sequence.push_back(enc.bottleneck);
        if (last) skips = enc.skips;
      }
      const Shape in_shape = sequence.back().shape();
      for (const auto& cell : mcgru_) sequence = gru_sequence_states(cell, sequence, config_.hidden_init);
      state = sequence.back();
      if (trace) trace->push_back({"MCGRUs", in_shape, state.shape()});
    }

    return decode(state, skips, trace);
  }

  // Decoder stages and head applied to a bottleneck state and the K-th frame's skips.
  Tensor<T> decode(const Tensor<T>& state, const std::array<Tensor<T>, 4>& skips, ShapeTrace* trace = nullptr) {
    Tensor<T> x = state;
    for (std::size_t stage = 0; stage < 4; ++stage) {
      auto& dec = decoder_[stage];
      x = traced("Upsampling", x, trace,
                 [&](const Tensor<T>& v) { return upsample2x(v, config_.upsample, dec.up_weight); });
      const std::string base = "conv" + std::to_string(6 + stage);
      Tensor<T> joined = concat_channels(x, skips[3 - stage]);
      x = traced(base + "_1", joined, trace, [&](const Tensor<T>& v) { return dec.first(v, mode_); });
      x = traced(base + "_2", x, trace, [&](const Tensor<T>& v) { return dec.second(v, mode_); });
    }
    return traced("conv10_1", x, trace, [&](const Tensor<T>& v) { return head_(v, mode_); });
  }

  // Per-pixel softmax over the two head channels; channel 1 is "lane".
  Tensor<T> predict_probabilities(const std::vector<Tensor<T>>& clip) {
    NoGradGuard no_grad;
    return softmax_channels(forward(clip));
  }

  // Learnable tensors in a fixed order.
  std::vector<NamedTensor<T>> parameters() const {
    std::vector<NamedTensor<T>> out;
    for (std::size_t level = 1; level <= 5; ++level) {
      const std::string base = "conv" + std::to_string(level);
      encoder_[level - 1][0].collect(base + "_1", out);
      encoder_[level - 1][1].collect(base + "_2", out);
    }
    if (fcgru_) {
      for (auto& p : fcgru_->named_parameters("fcgru.")) out.push_back(p);
    }
    for (std::size_t d = 0; d < mcgru_.size(); ++d) {
      for (auto& p : mcgru_[d].named_parameters("mcgru." + std::to_string(d) + ".")) out.push_back(p);
    }
    for (std::size_t stage = 0; stage < 4; ++stage) {
      const std::string base = "conv" + std::to_string(6 + stage);
      if (decoder_[stage].up_weight.defined()) out.push_back({"up" + std::to_string(6 + stage) + ".weight", decoder_[stage].up_weight});
      decoder_[stage].first.collect(base + "_1", out);
      decoder_[stage].second.collect(base + "_2", out);
    }
    head_.collect("conv10_1", out);
    return out;
  }

  std::vector<Tensor<T>> parameter_tensors() const {
    std::vector<Tensor<T>> out;
    for (auto& p : parameters()) out.push_back(p.tensor);
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : parameters()) n += p.tensor.numel();
    return n;
  }

  void zero_grad() {
    for (auto& p : parameters()) {
      if (p.tensor.has_grad()) p.tensor.zero_grad();
    }
  }

  // Parameters followed by batch-norm running statistics.
  std::vector<ContainerEntry> state_entries() const {
    std::vector<ContainerEntry> out;
    for (const auto& p : parameters()) out.push_back(make_entry(p.name, p.tensor));
    for_each_norm([&](const std::string& name, const ConvUnit<T>& u) {
      const Shape s{1, u.stats.mean.size(), 1, 1};
      out.push_back(make_entry(name + ".running_mean", s, u.stats.mean));
      out.push_back(make_entry(name + ".running_var", s, u.stats.var));
    });
    return out;
  }

  void load_state(const std::vector<ContainerEntry>& entries) {
    std::map<std::string, const ContainerEntry*> by_name;
    for (const auto& e : entries) by_name[e.name] = &e;
    auto find = [&](const std::string& name, const Shape& shape) -> const ContainerEntry& {
      auto it = by_name.find(name);
      if (it == by_name.end()) throw IoError("checkpoint: missing tensor " + name);
      if (!(it->second->shape == shape)) {
        throw ShapeError("checkpoint: tensor " + name + " has shape " + it->second->shape.str() +
                         ", network expects " + shape.str());
      }
      return *it->second;
    };
    for (auto& p : parameters()) {
      const auto& e = find(p.name, p.tensor.shape());
      std::copy(e.values.begin(), e.values.end(), p.tensor.values().begin());
    }
    for_each_norm([&](const std::string& name, ConvUnit<T>& u) {
      const Shape s{1, u.stats.mean.size(), 1, 1};
      const auto& m = find(name + ".running_mean", s);
      const auto& v = find(name + ".running_var", s);
      std::copy(m.values.begin(), m.values.end(), u.stats.mean.begin());
      std::copy(v.values.begin(), v.values.end(), u.stats.var.begin());
    });
  }

 private:
  struct DecoderStage {
    Tensor<T> up_weight;
    ConvUnit<T> first, second;
  };

  static std::mt19937_64 module_rng(std::uint64_t seed, std::uint64_t module) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(module)};
    return std::mt19937_64(seq);
  }

  template <typename Fn>
  static Tensor<T> traced(const std::string& layer, const Tensor<T>& in, ShapeTrace* trace, Fn&& fn) {
    Tensor<T> out = fn(in);
    if (trace) trace->push_back({layer, in.shape(), out.shape()});
    return out;
  }

  template <typename Fn>
  void for_each_norm(Fn&& fn) const {
    visit_norms(*this, fn);
  }
  template <typename Fn>
  void for_each_norm(Fn&& fn) {
    visit_norms(*this, fn);
  }
  template <typename Self, typename Fn>
  static void visit_norms(Self& self, Fn&& fn) {
    for (std::size_t level = 1; level <= 5; ++level) {
      const std::string base = "conv" + std::to_string(level);
      fn(base + "_1", self.encoder_[level - 1][0]);
      fn(base + "_2", self.encoder_[level - 1][1]);
    }
    for (std::size_t stage = 0; stage < 4; ++stage) {
      const std::string base = "conv" + std::to_string(6 + stage);
      fn(base + "_1", self.decoder_[stage].first);
      fn(base + "_2", self.decoder_[stage].second);
    }
  }

  NetworkConfig config_;
  NormMode mode_ = NormMode::kTrain;
  std::array<std::array<ConvUnit<T>, 2>, 5> encoder_;
  std::optional<ConvGruCell<T>> fcgru_;
  std::vector<ConvGruCell<T>> mcgru_;
  std::array<DecoderStage, 4> decoder_;
  ConvUnit<T> head_;
};

}  // namespace strada
