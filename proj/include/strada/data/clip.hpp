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

#include <cstdint>
#include <string>
#include <vector>

#include "strada/error.hpp"

namespace strada::data {

// K ordered frames plus the binary lane mask of the last one.
struct Clip {
  std::string id;
  std::size_t height = 0, width = 0;
  std::vector<std::vector<float>> frames;  // each planar (3,H,W) in [0,1]
  std::vector<std::uint8_t> label;         // (H,W), values 0/1

  std::size_t frame_count() const { return frames.size(); }

  void validate() const {
    if (frames.empty()) throw ShapeError("clip " + id + ": no frames");
    for (const auto& f : frames) {
      if (f.size() != 3 * height * width) throw ShapeError("clip " + id + ": frame extents differ");
    }
    if (label.size() != height * width) throw ShapeError("clip " + id + ": label extents differ");
    for (const auto v : label) {
      if (v > 1) throw ShapeError("clip " + id + ": label is not binary");
    }
  }

  // The window of the last k frames; the label stays with the final frame.
  Clip last_frames(std::size_t k) const {
    if (k == 0 || k > frames.size()) {
      throw ShapeError("clip " + id + ": cannot take " + std::to_string(k) + " of " +
                       std::to_string(frames.size()) + " frames");
    }
    Clip out = *this;
    out.frames.assign(frames.end() - static_cast<std::ptrdiff_t>(k), frames.end());
    return out;
  }

  double positive_fraction() const {
    std::size_t n = 0;
    for (const auto v : label) n += v;
    return label.empty() ? 0.0 : static_cast<double>(n) / static_cast<double>(label.size());
  }
};

}  // namespace strada::data
