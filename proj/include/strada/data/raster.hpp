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
#include <cmath>
#include <cstdint>
#include <vector>

namespace strada::data {

// Pixel (row y, column x) has its center at (x, y).
struct Point {
  double x = 0.0, y = 0.0;
};
using Polyline = std::vector<Point>;

inline double segment_distance_sq(Point p, Point a, Point b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len_sq = dx * dx + dy * dy;
  double t = 0.0;
  if (len_sq > 0.0) t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len_sq, 0.0, 1.0);
  const double ex = p.x - (a.x + t * dx), ey = p.y - (a.y + t * dy);
  return ex * ex + ey * ey;
}

// Marks every pixel whose center lies within stroke_width/2 of a polyline
// into `mask` (values become 1; overlaps stay 1). Points are clamped to the
// image first.
inline void rasterize_into(std::vector<std::uint8_t>& mask, const Polyline& line, std::size_t width,
                           std::size_t height, double stroke_width) {
  if (line.empty() || width == 0 || height == 0) return;
  const double radius = stroke_width / 2.0;
  const double r_sq = radius * radius;
  Polyline pts(line);
  for (auto& p : pts) {
    p.x = std::clamp(p.x, 0.0, static_cast<double>(width - 1));
    p.y = std::clamp(p.y, 0.0, static_cast<double>(height - 1));
  }
  if (pts.size() == 1) pts.push_back(pts.front());
  for (std::size_t s = 0; s + 1 < pts.size(); ++s) {
    const Point a = pts[s], b = pts[s + 1];
    const auto lo = [&](double v) { return static_cast<long>(std::floor(v - radius)); };
    const auto hi = [&](double v) { return static_cast<long>(std::ceil(v + radius)); };
    const long x0 = std::max(0L, lo(std::min(a.x, b.x)));
    const long x1 = std::min(static_cast<long>(width) - 1, hi(std::max(a.x, b.x)));
    const long y0 = std::max(0L, lo(std::min(a.y, b.y)));
    const long y1 = std::min(static_cast<long>(height) - 1, hi(std::max(a.y, b.y)));
    for (long y = y0; y <= y1; ++y) {
      for (long x = x0; x <= x1; ++x) {
        const Point c{static_cast<double>(x), static_cast<double>(y)};
        if (segment_distance_sq(c, a, b) <= r_sq) mask[static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x)] = 1;
      }
    }
  }
}

// Union of all lane strokes as a (H,W) 0/1 mask.
inline std::vector<std::uint8_t> rasterize_label(const std::vector<Polyline>& lanes, std::size_t width,
                                                 std::size_t height, double stroke_width) {
  std::vector<std::uint8_t> mask(width * height, 0);
  for (const auto& lane : lanes) rasterize_into(mask, lane, width, height, stroke_width);
  return mask;
}

}  // namespace strada::data
