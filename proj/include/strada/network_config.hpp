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
#include <cstdint>
#include <string>
#include <cmath>
#include <string_view>

#include "strada/convgru.hpp"
#include "strada/error.hpp"
#include "strada/ops.hpp"

namespace strada {

// Where the front GRU sits: after the second conv of encoder block 1..5.
enum class FcgruLocation { kNone = 0, kConv1_2 = 1, kConv2_2 = 2, kConv3_2 = 3, kConv4_2 = 4, kConv5_2 = 5 };

inline std::string to_string(FcgruLocation loc) {
  if (loc == FcgruLocation::kNone) return "none";
  return "conv" + std::to_string(static_cast<int>(loc)) + "_2";
}

inline FcgruLocation parse_fcgru_location(std::string_view name) {
  if (name == "none") return FcgruLocation::kNone;
  for (int level = 1; level <= 5; ++level) {
    if (name == "conv" + std::to_string(level) + "_2") return static_cast<FcgruLocation>(level);
  }
  throw ConfigError("unknown FCGRU location '" + std::string(name) + "'");
}

inline std::string to_string(UpsampleMode mode) {
  return mode == UpsampleMode::kNearest ? "nearest" : "tconv";
}

inline UpsampleMode parse_upsample_mode(std::string_view name) {
  if (name == "tconv" || name == "transposed-conv") return UpsampleMode::kTransposedConv;
  if (name == "nearest") return UpsampleMode::kNearest;
  throw ConfigError("unknown upsample mode '" + std::string(name) + "'");
}

inline std::string to_string(HiddenInit init) {
  return init == HiddenInit::kZeros ? "zeros" : "copy-input";
}

inline HiddenInit parse_hidden_init(std::string_view name) {
  if (name == "copy-input") return HiddenInit::kCopyInput;
  if (name == "zeros") return HiddenInit::kZeros;
  throw ConfigError("unknown hidden-init policy '" + std::string(name) + "'");
}

struct NetworkConfig {
  // Output channels of conv1_1, conv1_2, ..., conv5_2 | conv6_1, ..., conv9_2, conv10_1.
  static constexpr std::array<std::size_t, 19> kDefaultChannels = {
      32, 32, 48, 48, 64, 64, 128, 128, 128, 128, 128, 128, 64, 64, 48, 48, 16, 16, 2};

  std::size_t frames = 5;
  std::size_t height = 128;
  std::size_t width = 256;
  std::array<std::size_t, 19> channels = kDefaultChannels;
  FcgruLocation fcgru_location = FcgruLocation::kConv2_2;
  bool mcgru_enabled = true;
  std::size_t mcgru_depth = 1;
  UpsampleMode upsample = UpsampleMode::kTransposedConv;
  HiddenInit hidden_init = HiddenInit::kCopyInput;
  // The skip at the FCGRU's level carries the GRU output rather than the conv output.
  bool skip_from_fcgru = true;
  std::size_t gru_kernel = 3;
  // Both head logits start at this value; a positive start keeps the final
  // ReLU active on every pixel at initialization.
  double head_bias_init = 2.0;
  std::uint64_t seed = 0;

  std::size_t encoder_out(std::size_t level) const { return channels[2 * (level - 1) + 1]; }

  bool operator==(const NetworkConfig&) const = default;

  // Divides every width by `divisor` (floor, at least 1); the two-class head stays.
  NetworkConfig with_width_divisor(std::size_t divisor) const {
    NetworkConfig c = *this;
    for (std::size_t i = 0; i + 1 < c.channels.size(); ++i) {
      c.channels[i] = std::max<std::size_t>(1, kDefaultChannels[i] / divisor);
    }
    return c;
  }

  void validate() const {
    if (frames == 0) throw ConfigError("network: frame count K must be at least 1");
    if (height == 0 || width == 0 || height % 16 != 0 || width % 16 != 0) {
      throw ConfigError("network: input extents must be positive multiples of 16, got " +
                        std::to_string(height) + "x" + std::to_string(width));
    }
    for (std::size_t c : channels) {
      if (c == 0) throw ConfigError("network: channel counts must be positive");
    }
    if (channels.back() != 2) throw ConfigError("network: the head must emit 2 channels");
    if (mcgru_enabled && mcgru_depth == 0) throw ConfigError("network: MCGRU depth must be >= 1");
    if (!std::isfinite(head_bias_init)) throw ConfigError("network: head bias init must be finite");
    if (gru_kernel % 2 == 0) throw ConfigError("network: GRU kernel size must be odd");
    const int loc = static_cast<int>(fcgru_location);
    if (loc < 0 || loc > 5) throw ConfigError("network: invalid FCGRU location");
  }
};

}  // namespace strada
