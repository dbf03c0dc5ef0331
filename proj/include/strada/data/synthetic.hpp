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
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "strada/data/clip.hpp"
#include "strada/data/image.hpp"
#include "strada/data/raster.hpp"
#include "strada/error.hpp"

namespace strada::data {

enum class OcclusionMode { kNone, kExplicit, kLastFrameLane };
enum class OccluderStyle { kRoad, kSolid };

// Axis-aligned occluder over frames [first_frame, last_frame] (1-based, inclusive).
struct OcclusionRect {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  std::size_t first_frame = 1, last_frame = 1;
  bool operator==(const OcclusionRect&) const = default;
};

// Parameters of a procedural road clip. Geometry ranges are fractions of the
// image width; stroke width and ego-motion are in pixels.
struct SyntheticSpec {
  std::size_t height = 128, width = 256, frames = 5;
  std::size_t lanes_min = 2, lanes_max = 4;
  double min_lane_gap = 0.15;  // between adjacent lanes at the bottom row
  double slope_max = 0.12;     // lateral drift from bottom row to horizon
  double bend_max = 0.05;      // quadratic lateral bend at the horizon
  double dashed_probability = 0.5;
  double dash_on = 10, dash_off = 8;  // pixels along the image rows
  double stroke_width = 2;
  double ego_motion = 4;  // downward dash movement per frame
  double horizon = 0.35;  // lanes start at this fraction of the height
  double noise = 12;      // uniform per-pixel noise amplitude, 8-bit levels
  OcclusionMode occlusion_mode = OcclusionMode::kNone;
  OccluderStyle occluder_style = OccluderStyle::kRoad;
  std::vector<OcclusionRect> occlusions;
  std::uint64_t seed = 0;

  void validate() const {
    if (lanes_min == 0 || lanes_max < lanes_min) throw ConfigError("synthetic: lane count range must be >= 1");
    if (lanes_max > 5) throw ConfigError("synthetic: at most 5 lanes");
    if (height == 0 || width == 0 || frames == 0) throw ConfigError("synthetic: empty extents or no frames");
    if (stroke_width <= 0) throw ConfigError("synthetic: stroke width must be positive");
    if (horizon < 0 || horizon >= 1) throw ConfigError("synthetic: horizon must lie in [0,1)");
    if (dash_on <= 0 || dash_off < 0) throw ConfigError("synthetic: bad dash pattern");
    if (min_lane_gap * static_cast<double>(lanes_max) > 0.84) {
      throw ConfigError("synthetic: lanes do not fit with the requested gap");
    }
  }
};

struct LaneGeometry {
  Polyline points;
  bool dashed = false;
  std::array<std::uint8_t, 3> color{235, 235, 235};
  double dash_phase = 0;
};

struct SyntheticClip {
  Clip clip;
  std::vector<Image> frames;
  Image label;
  std::vector<LaneGeometry> lanes;
  std::vector<OcclusionRect> occlusions;  // as applied
};

namespace detail {

inline std::string to_string(OcclusionMode m) {
  switch (m) {
    case OcclusionMode::kNone:
      return "none";
    case OcclusionMode::kExplicit:
      return "explicit";
    case OcclusionMode::kLastFrameLane:
      return "last-frame-lane";
  }
  return "none";
}

inline OcclusionMode parse_occlusion_mode(const std::string& s) {
  if (s == "none") return OcclusionMode::kNone;
  if (s == "explicit") return OcclusionMode::kExplicit;
  if (s == "last-frame-lane") return OcclusionMode::kLastFrameLane;
  throw ConfigError("synthetic: unknown occlusion mode '" + s + "'");
}

inline double positive_mod(double a, double m) {
  const double r = std::fmod(a, m);
  return r < 0 ? r + m : r;
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const SyntheticSpec& s) {
  nlohmann::ordered_json j;
  j["height"] = s.height;
  j["width"] = s.width;
  j["frames"] = s.frames;
  j["lanes_min"] = s.lanes_min;
  j["lanes_max"] = s.lanes_max;
  j["min_lane_gap"] = s.min_lane_gap;
  j["slope_max"] = s.slope_max;
  j["bend_max"] = s.bend_max;
  j["dashed_probability"] = s.dashed_probability;
  j["dash_on"] = s.dash_on;
  j["dash_off"] = s.dash_off;
  j["stroke_width"] = s.stroke_width;
  j["ego_motion"] = s.ego_motion;
  j["horizon"] = s.horizon;
  j["noise"] = s.noise;
  j["occlusion_mode"] = detail::to_string(s.occlusion_mode);
  j["occluder_style"] = s.occluder_style == OccluderStyle::kRoad ? "road" : "solid";
  j["occlusions"] = nlohmann::ordered_json::array();
  for (const auto& o : s.occlusions) {
    j["occlusions"].push_back({{"x0", o.x0}, {"y0", o.y0}, {"x1", o.x1}, {"y1", o.y1},
                               {"first_frame", o.first_frame}, {"last_frame", o.last_frame}});
  }
  j["seed"] = s.seed;
  return j;
}

// Missing keys keep their defaults.
template <typename Json>
SyntheticSpec synthetic_spec_from_json(const Json& j, SyntheticSpec s = {}) {
  try {
    s.height = j.value("height", s.height);
    s.width = j.value("width", s.width);
    s.frames = j.value("frames", s.frames);
    s.lanes_min = j.value("lanes_min", s.lanes_min);
    s.lanes_max = j.value("lanes_max", s.lanes_max);
    s.min_lane_gap = j.value("min_lane_gap", s.min_lane_gap);
    s.slope_max = j.value("slope_max", s.slope_max);
    s.bend_max = j.value("bend_max", s.bend_max);
    s.dashed_probability = j.value("dashed_probability", s.dashed_probability);
    s.dash_on = j.value("dash_on", s.dash_on);
    s.dash_off = j.value("dash_off", s.dash_off);
    s.stroke_width = j.value("stroke_width", s.stroke_width);
    s.ego_motion = j.value("ego_motion", s.ego_motion);
    s.horizon = j.value("horizon", s.horizon);
    s.noise = j.value("noise", s.noise);
    if (j.contains("occlusion_mode")) s.occlusion_mode = detail::parse_occlusion_mode(j.at("occlusion_mode"));
    if (j.contains("occluder_style")) {
      const std::string style = j.at("occluder_style");
      if (style != "road" && style != "solid") throw ConfigError("synthetic: unknown occluder style");
      s.occluder_style = style == "road" ? OccluderStyle::kRoad : OccluderStyle::kSolid;
    }
    if (j.contains("occlusions")) {
      s.occlusions.clear();
      for (const auto& o : j.at("occlusions")) {
        s.occlusions.push_back({o.at("x0"), o.at("y0"), o.at("x1"), o.at("y1"), o.at("first_frame"),
                                o.at("last_frame")});
      }
    }
    s.seed = j.value("seed", s.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synthetic spec: ") + e.what());
  }
  return s;
}

// Resizes a spec, scaling the vertical pixel quantities (ego-motion, dash
// lengths) with the height. Stroke width is kept.
inline SyntheticSpec rescaled(SyntheticSpec s, std::size_t height, std::size_t width) {
  const double f = static_cast<double>(height) / static_cast<double>(s.height);
  s.ego_motion *= f;
  s.dash_on *= f;
  s.dash_off *= f;
  s.height = height;
  s.width = width;
  return s;
}

// A clip where one lane is hidden in the final frame only.
inline SyntheticSpec occlusion_suite_spec() {
  SyntheticSpec s;
  s.lanes_min = 2;
  s.lanes_max = 3;
  s.min_lane_gap = 0.22;
  s.slope_max = 0.04;
  s.bend_max = 0.02;
  s.occlusion_mode = OcclusionMode::kLastFrameLane;
  s.occluder_style = OccluderStyle::kRoad;
  return s;
}

inline SyntheticSpec synthetic_preset(const std::string& name) {
  if (name == "default") return SyntheticSpec{};
  if (name == "occlusion") return occlusion_suite_spec();
  throw ConfigError("unknown synthetic preset '" + name + "'");
}

// Renders a spec into K frames and the last frame's label. Pure function of
// the spec (including its seed). The label covers the full lane geometry,
// including dash gaps and occluded stretches.
inline SyntheticClip generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double w = static_cast<double>(spec.width);
  const double h = static_cast<double>(spec.height);
  const double bottom = h - 1;
  const double top = std::floor(spec.horizon * h);

  const std::size_t n_lanes =
      spec.lanes_min + static_cast<std::size_t>(unit(rng) * static_cast<double>(spec.lanes_max - spec.lanes_min + 1)) %
                           (spec.lanes_max - spec.lanes_min + 1);
  // Bottom-row x positions with the required spacing: spread the slack
  // between lanes at random.
  const double lo = 0.08 * w, hi = 0.92 * w;
  const double gap = spec.min_lane_gap * w;
  const double slack = (hi - lo) - gap * static_cast<double>(n_lanes - 1);
  std::vector<double> cuts(n_lanes);
  for (auto& c : cuts) c = unit(rng) * slack;
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> base_x(n_lanes);
  for (std::size_t i = 0; i < n_lanes; ++i) base_x[i] = lo + cuts[i] + gap * static_cast<double>(i);

  const double slope = (2 * unit(rng) - 1) * spec.slope_max * w;
  const double bend = (2 * unit(rng) - 1) * spec.bend_max * w;
  const bool straight = slope == 0.0 && bend == 0.0;

  SyntheticClip out;
  for (std::size_t i = 0; i < n_lanes; ++i) {
    LaneGeometry lane;
    lane.dashed = unit(rng) < spec.dashed_probability;
    lane.dash_phase = unit(rng) * (spec.dash_on + spec.dash_off);
    if (unit(rng) < 0.3) lane.color = {230, 200, 70};
    const auto x_at = [&](double y) {
      const double u = (bottom - y) / std::max(1.0, bottom - top);
      return base_x[i] + slope * u + bend * u * u;
    };
    if (straight) {
      lane.points = {{base_x[i], bottom}, {base_x[i], top}};
    } else {
      for (double y = bottom; y >= top; y -= 2) {
        const double x = x_at(y);
        if (x < 0 || x > w - 1) break;
        lane.points.push_back({x, y});
      }
      if (lane.points.size() == 1) lane.points.push_back(lane.points.front());
    }
    out.lanes.push_back(lane);
  }

  out.occlusions = spec.occlusions;
  if (spec.occlusion_mode == OcclusionMode::kNone) out.occlusions.clear();
  if (spec.occlusion_mode == OcclusionMode::kLastFrameLane) {
    const std::size_t target = std::min(n_lanes - 1, static_cast<std::size_t>(unit(rng) * static_cast<double>(n_lanes)));
    double x0 = w, x1 = 0;
    for (const auto& p : out.lanes[target].points) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
    }
    const double margin = spec.stroke_width + 1;
    out.occlusions.push_back({x0 - margin, top - margin, x1 + margin, h, spec.frames, spec.frames});
  }

  std::vector<Polyline> polylines;
  for (const auto& lane : out.lanes) polylines.push_back(lane.points);
  const auto label_mask = rasterize_label(polylines, spec.width, spec.height, spec.stroke_width);

  std::vector<std::vector<std::uint8_t>> lane_masks;
  for (const auto& lane : out.lanes) {
    lane_masks.push_back(rasterize_label({lane.points}, spec.width, spec.height, spec.stroke_width));
  }

  const std::array<std::uint8_t, 3> sky{170, 180, 200}, road{90, 90, 95}, solid{45, 45, 55};
  std::uniform_int_distribution<int> noise(-static_cast<int>(spec.noise), static_cast<int>(spec.noise));
  const double period = spec.dash_on + spec.dash_off;
  for (std::size_t f = 0; f < spec.frames; ++f) {
    Image img(spec.width, spec.height, 3);
    for (std::size_t y = 0; y < spec.height; ++y) {
      const auto& bg = static_cast<double>(y) < top ? sky : road;
      for (std::size_t x = 0; x < spec.width; ++x) {
        for (std::size_t c = 0; c < 3; ++c) img.at(y, x, c) = bg[c];
      }
    }
    for (std::size_t i = 0; i < out.lanes.size(); ++i) {
      const auto& lane = out.lanes[i];
      for (std::size_t y = 0; y < spec.height; ++y) {
        if (lane.dashed) {
          const double phase = detail::positive_mod(static_cast<double>(y) - spec.ego_motion * static_cast<double>(f) -
                                                        lane.dash_phase,
                                                    period);
          if (phase >= spec.dash_on) continue;
        }
        for (std::size_t x = 0; x < spec.width; ++x) {
          if (!lane_masks[i][y * spec.width + x]) continue;
          for (std::size_t c = 0; c < 3; ++c) img.at(y, x, c) = lane.color[c];
        }
      }
    }
    for (const auto& o : out.occlusions) {
      if (f + 1 < o.first_frame || f + 1 > o.last_frame) continue;
      const auto ylo = static_cast<std::size_t>(std::clamp(std::ceil(o.y0), 0.0, h));
      const auto yhi = static_cast<std::size_t>(std::clamp(std::floor(o.y1), -1.0, h - 1) + 1);
      const auto xlo = static_cast<std::size_t>(std::clamp(std::ceil(o.x0), 0.0, w));
      const auto xhi = static_cast<std::size_t>(std::clamp(std::floor(o.x1), -1.0, w - 1) + 1);
      for (std::size_t y = ylo; y < yhi; ++y) {
        const auto& fill = spec.occluder_style == OccluderStyle::kSolid ? solid
                           : static_cast<double>(y) < top               ? sky
                                                                        : road;
        for (std::size_t x = xlo; x < xhi; ++x) {
          for (std::size_t c = 0; c < 3; ++c) img.at(y, x, c) = fill[c];
        }
      }
    }
    if (spec.noise > 0) {
      for (auto& p : img.pixels) p = static_cast<std::uint8_t>(std::clamp(static_cast<int>(p) + noise(rng), 0, 255));
    }
    out.frames.push_back(std::move(img));
  }

  out.label = mask_to_image(label_mask, spec.height, spec.width);
  out.clip.id = "synth-" + std::to_string(spec.seed);
  out.clip.height = spec.height;
  out.clip.width = spec.width;
  for (const auto& img : out.frames) out.clip.frames.push_back(to_planar_rgb(img, spec.height, spec.width));
  out.clip.label = label_mask;
  return out;
}

}  // namespace strada::data
