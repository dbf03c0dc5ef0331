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

#include <string>
#include <string_view>
#include <vector>

#include "strada/data/clip.hpp"
#include "strada/data/image.hpp"
#include "strada/error.hpp"

namespace strada::data {

// Which frames of a raw recording form a clip. Indices are 1-based and
// strictly increasing; the last one is the labeled frame.
struct SamplingScheme {
  std::string name;
  std::vector<std::size_t> indices;
  std::size_t raw_length = 0;

  void validate() const {
    if (indices.empty()) throw ConfigError("sampling scheme " + name + ": no indices");
    for (std::size_t i = 0; i < indices.size(); ++i) {
      if (indices[i] == 0 || indices[i] > raw_length) {
        throw ConfigError("sampling scheme " + name + ": index out of range");
      }
      if (i > 0 && indices[i] <= indices[i - 1]) {
        throw ConfigError("sampling scheme " + name + ": indices must strictly increase");
      }
    }
  }

  std::size_t labeled_index() const { return indices.back(); }
};

// TuSimple: 20 frames per one-second clip, the 20th labeled.
inline SamplingScheme tusimple_scheme(int dataset) {
  if (dataset == 1) return {"tusimple-1", {1, 5, 10, 15, 20}, 20};
  if (dataset == 2) return {"tusimple-2", {2, 5, 9, 14, 20}, 20};
  throw ConfigError("tusimple scheme must be 1 or 2");
}

// LLAMAS: records of 5 (dataset 1) or 15 (dataset 2) consecutive frames.
inline SamplingScheme llamas_scheme(int dataset) {
  if (dataset == 1) return {"llamas-1", {1, 2, 3, 4, 5}, 5};
  if (dataset == 2) return {"llamas-2", {1, 3, 6, 10, 15}, 15};
  throw ConfigError("llamas scheme must be 1 or 2");
}

// The last k frames of a raw recording.
inline SamplingScheme trailing_scheme(std::size_t k, std::size_t raw_length) {
  SamplingScheme s{"trailing-" + std::to_string(k), {}, raw_length};
  if (k == 0 || k > raw_length) throw ConfigError("trailing scheme: k out of range");
  for (std::size_t i = raw_length - k + 1; i <= raw_length; ++i) s.indices.push_back(i);
  return s;
}

inline SamplingScheme sampling_scheme(std::string_view name) {
  if (name == "tusimple-1") return tusimple_scheme(1);
  if (name == "tusimple-2") return tusimple_scheme(2);
  if (name == "llamas-1") return llamas_scheme(1);
  if (name == "llamas-2") return llamas_scheme(2);
  throw ConfigError("unknown sampling scheme '" + std::string(name) + "'");
}

// Picks the scheme's frames from a raw recording and attaches the label of
// the last one. Extents are kept as recorded.
inline Clip sample_clip(const std::vector<Image>& raw_frames, const SamplingScheme& scheme, const Image& label,
                        std::string id = {}) {
  scheme.validate();
  if (raw_frames.size() < scheme.raw_length) {
    throw ShapeError("sample_clip: raw clip " + id + " has " + std::to_string(raw_frames.size()) +
                     " frames, scheme " + scheme.name + " needs " + std::to_string(scheme.raw_length));
  }
  Clip clip;
  clip.id = std::move(id);
  const Image& labeled = raw_frames[scheme.labeled_index() - 1];
  clip.height = labeled.height;
  clip.width = labeled.width;
  for (std::size_t idx : scheme.indices) {
    const Image& f = raw_frames[idx - 1];
    if (f.width != clip.width || f.height != clip.height) {
      throw ShapeError("sample_clip: frames of " + clip.id + " differ in extents");
    }
    clip.frames.push_back(to_planar_rgb(f, clip.height, clip.width));
  }
  if (label.width != clip.width || label.height != clip.height) {
    throw ShapeError("sample_clip: label of " + clip.id + " does not match frame extents");
  }
  clip.label = to_binary_mask(label, clip.height, clip.width);
  return clip;
}

}  // namespace strada::data
