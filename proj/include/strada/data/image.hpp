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

#include <png.h>

#include <algorithm>
#include <cctype>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "strada/error.hpp"

namespace strada::data {

// 8-bit image, interleaved (row-major, channel fastest). 1 or 3 channels.
struct Image {
  std::size_t width = 0, height = 0, channels = 1;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(std::size_t w, std::size_t h, std::size_t c, std::uint8_t fill = 0)
      : width(w), height(h), channels(c), pixels(w * h * c, fill) {}

  std::uint8_t& at(std::size_t y, std::size_t x, std::size_t c = 0) {
    return pixels[(y * width + x) * channels + c];
  }
  std::uint8_t at(std::size_t y, std::size_t x, std::size_t c = 0) const {
    return pixels[(y * width + x) * channels + c];
  }
  bool operator==(const Image&) const = default;
};

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Next whitespace-delimited header token, skipping '#' comments.
inline std::string pnm_token(const std::string& buf, std::size_t& pos) {
  while (pos < buf.size()) {
    if (buf[pos] == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(buf[pos]))) {
      ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < buf.size() && !std::isspace(static_cast<unsigned char>(buf[pos])) && buf[pos] != '#') ++pos;
  return buf.substr(start, pos - start);
}

}  // namespace detail

// Binary PGM (P5) or PPM (P6) with maxval <= 255.
inline Image decode_pnm(const std::string& buf, const std::string& name) {
  std::size_t pos = 0;
  const std::string magic = detail::pnm_token(buf, pos);
  if (magic != "P5" && magic != "P6") throw IoError(name + ": not a binary PGM/PPM file");
  long w = 0, h = 0, maxval = 0;
  try {
    w = std::stol(detail::pnm_token(buf, pos));
    h = std::stol(detail::pnm_token(buf, pos));
    maxval = std::stol(detail::pnm_token(buf, pos));
  } catch (const std::exception&) {
    throw IoError(name + ": corrupt PNM header");
  }
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) throw IoError(name + ": unsupported PNM header");
  ++pos;  // single whitespace after maxval
  Image img(static_cast<std::size_t>(w), static_cast<std::size_t>(h), magic == "P5" ? 1 : 3);
  if (buf.size() < pos + img.pixels.size()) throw IoError(name + ": truncated PNM payload");
  std::copy_n(buf.begin() + static_cast<std::ptrdiff_t>(pos), img.pixels.size(), img.pixels.begin());
  if (maxval != 255) {
    for (auto& p : img.pixels) {
      p = static_cast<std::uint8_t>(std::lround(255.0 * std::min<long>(p, maxval) / maxval));
    }
  }
  return img;
}

inline Image decode_png(const std::string& buf, const std::string& name) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, buf.data(), buf.size())) {
    throw IoError(name + ": corrupt PNG (" + std::string(image.message) + ")");
  }
  const bool gray = (image.format & PNG_FORMAT_FLAG_COLOR) == 0;
  image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  Image img(image.width, image.height, gray ? 1 : 3);
  if (!png_image_finish_read(&image, nullptr, img.pixels.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw IoError(name + ": corrupt PNG (" + msg + ")");
  }
  return img;
}

// Reads PGM/PPM or PNG, chosen by content.
inline Image read_image(const std::string& path) {
  const std::string buf = detail::read_file(path);
  static constexpr std::array<unsigned char, 8> kPngMagic = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  if (buf.size() >= 8 && std::equal(kPngMagic.begin(), kPngMagic.end(), buf.begin(),
                                    [](unsigned char a, char b) { return a == static_cast<unsigned char>(b); })) {
    return decode_png(buf, path);
  }
  return decode_pnm(buf, path);
}

inline std::string encode_pnm(const Image& img) {
  if (img.channels != 1 && img.channels != 3) throw IoError("PNM encode: 1 or 3 channels required");
  std::string out = (img.channels == 1 ? "P5\n" : "P6\n") + std::to_string(img.width) + " " +
                    std::to_string(img.height) + "\n255\n";
  out.append(img.pixels.begin(), img.pixels.end());
  return out;
}

// Writes P5 for 1-channel images and P6 for 3-channel images.
inline void write_pnm(const std::string& path, const Image& img) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  const std::string bytes = encode_pnm(img);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path);
}

inline Image to_rgb(const Image& img) {
  if (img.channels == 3) return img;
  Image out(img.width, img.height, 3);
  for (std::size_t i = 0; i < img.width * img.height; ++i) {
    for (std::size_t c = 0; c < 3; ++c) out.pixels[i * 3 + c] = img.pixels[i * img.channels];
  }
  return out;
}

// Bilinear resample (half-pixel centers) to a planar (3,H,W) float array in
// [0,1]. Equal extents reproduce v/255 exactly.
inline std::vector<float> to_planar_rgb(const Image& src, std::size_t height, std::size_t width) {
  const Image rgb = to_rgb(src);
  std::vector<float> out(3 * height * width);
  const double sy = static_cast<double>(rgb.height) / static_cast<double>(height);
  const double sx = static_cast<double>(rgb.width) / static_cast<double>(width);
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, static_cast<double>(rgb.height - 1));
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, rgb.height - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, static_cast<double>(rgb.width - 1));
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, rgb.width - 1);
      const double wx = fx - static_cast<double>(x0);
      for (std::size_t c = 0; c < 3; ++c) {
        double v = rgb.at(y0, x0, c);
        if (wx > 0 || wy > 0) {
          v = (1 - wy) * ((1 - wx) * rgb.at(y0, x0, c) + wx * rgb.at(y0, x1, c)) +
              wy * ((1 - wx) * rgb.at(y1, x0, c) + wx * rgb.at(y1, x1, c));
        }
        out[(c * height + y) * width + x] = static_cast<float>(v / 255.0);
      }
    }
  }
  return out;
}

// Nearest-neighbour resample of a label image to a 0/1 mask (> 127 is lane).
inline std::vector<std::uint8_t> to_binary_mask(const Image& src, std::size_t height, std::size_t width) {
  std::vector<std::uint8_t> out(height * width);
  for (std::size_t y = 0; y < height; ++y) {
    const std::size_t sy = std::min(src.height - 1, (y * src.height + src.height / 2) / height);
    for (std::size_t x = 0; x < width; ++x) {
      const std::size_t sx = std::min(src.width - 1, (x * src.width + src.width / 2) / width);
      out[y * width + x] = src.at(sy, sx, 0) > 127 ? 1 : 0;
    }
  }
  return out;
}

inline Image mask_to_image(const std::vector<std::uint8_t>& mask, std::size_t height, std::size_t width) {
  Image img(width, height, 1);
  for (std::size_t i = 0; i < mask.size(); ++i) img.pixels[i] = mask[i] ? 255 : 0;
  return img;
}

// Converts planar float (3,H,W) in [0,1] back to an interleaved RGB image.
inline Image planar_to_image(const std::vector<float>& planar, std::size_t height, std::size_t width) {
  Image img(width, height, 3);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < height * width; ++i) {
      const double v = std::clamp(static_cast<double>(planar[c * height * width + i]), 0.0, 1.0);
      img.pixels[i * 3 + c] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
  }
  return img;
}

}  // namespace strada::data
