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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "strada/data/clip.hpp"
#include "strada/data/image.hpp"
#include "strada/data/synthetic.hpp"
#include "strada/error.hpp"

namespace strada::data {

namespace fs = std::filesystem;

struct IndexEntry {
  std::string id;
  std::string dir;  // as written in the index; relative paths resolve against the index directory
  bool operator==(const IndexEntry&) const = default;
};

inline std::string frame_file_stem(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%02zu", i + 1);
  return buf;
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// frame_01.ppm ... frame_KK.ppm, label.pgm and the resolved spec.json.
inline void write_clip_dir(const fs::path& dir, const SyntheticClip& clip, const SyntheticSpec& spec) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < clip.frames.size(); ++i) write_pnm((dir / (frame_file_stem(i) + ".ppm")).string(), clip.frames[i]);
  write_pnm((dir / "label.pgm").string(), clip.label);
  auto j = to_json(spec);
  j["applied_occlusions"] = nlohmann::ordered_json::array();
  for (const auto& o : clip.occlusions) {
    j["applied_occlusions"].push_back({{"x0", o.x0}, {"y0", o.y0}, {"x1", o.x1}, {"y1", o.y1},
                                       {"first_frame", o.first_frame}, {"last_frame", o.last_frame}});
  }
  write_text(dir / "spec.json", j.dump(2) + "\n");
}

inline void write_index(const fs::path& path, const std::vector<IndexEntry>& entries) {
  std::string text;
  for (const auto& e : entries) {
    nlohmann::ordered_json j;
    j["id"] = e.id;
    j["dir"] = e.dir;
    text += j.dump() + "\n";
  }
  write_text(path, text);
}

inline std::vector<IndexEntry> read_index(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("dataset index not found: " + path.string());
  std::ifstream in(path);
  std::vector<IndexEntry> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("id").get<std::string>(), j.at("dir").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": bad index line (" + e.what() + ")");
    }
  }
  return out;
}

// Generates count clips with seeds base_seed, base_seed + 1, ... into out_dir
// and writes out_dir/index.jsonl.
inline std::vector<IndexEntry> generate_dataset(const SyntheticSpec& base, std::size_t count, const fs::path& out_dir) {
  base.validate();
  fs::create_directories(out_dir);
  std::vector<IndexEntry> entries;
  for (std::size_t i = 0; i < count; ++i) {
    SyntheticSpec spec = base;
    spec.seed = base.seed + i;
    const auto clip = generate_synthetic(spec);
    char name[32];
    std::snprintf(name, sizeof(name), "clip_%04zu", i);
    write_clip_dir(out_dir / name, clip, spec);
    entries.push_back({clip.clip.id, name});
  }
  write_index(out_dir / "index.jsonl", entries);
  return entries;
}

struct LoadOptions {
  std::size_t height = 128, width = 256;
  std::size_t frames = 0;   // 0 accepts any count
  bool take_last = false;   // keep the trailing `frames` frames of longer clips
};

namespace detail {

inline std::optional<fs::path> find_image(const fs::path& dir, const std::string& stem) {
  for (const char* ext : {".png", ".ppm", ".pgm"}) {
    const auto p = dir / (stem + ext);
    if (fs::exists(p)) return p;
  }
  return std::nullopt;
}

}  // namespace detail

inline Clip load_clip(const IndexEntry& entry, const fs::path& base_dir, const LoadOptions& opts) {
  const fs::path dir = fs::path(entry.dir).is_absolute() ? fs::path(entry.dir) : base_dir / entry.dir;
  const auto fail = [&](const std::string& what) { return IoError("clip " + entry.id + ": " + what); };
  if (!fs::is_directory(dir)) throw fail("missing directory " + dir.string());
  Clip clip;
  clip.id = entry.id;
  clip.height = opts.height;
  clip.width = opts.width;
  std::vector<fs::path> frame_paths;
  for (std::size_t i = 0;; ++i) {
    auto p = detail::find_image(dir, frame_file_stem(i));
    if (!p) break;
    frame_paths.push_back(*p);
  }
  if (frame_paths.empty()) throw fail("no frames in " + dir.string());
  if (opts.frames != 0) {
    const bool ok = opts.take_last ? frame_paths.size() >= opts.frames : frame_paths.size() == opts.frames;
    if (!ok) {
      throw ShapeError("clip " + entry.id + ": has " + std::to_string(frame_paths.size()) + " frames, expected " +
                       std::to_string(opts.frames));
    }
    frame_paths.erase(frame_paths.begin(), frame_paths.end() - static_cast<std::ptrdiff_t>(opts.frames));
  }
  const auto label_path = detail::find_image(dir, "label");
  if (!label_path) throw fail("missing label image");
  try {
    std::optional<std::pair<std::size_t, std::size_t>> extents;
    for (const auto& p : frame_paths) {
      const Image img = read_image(p.string());
      if (extents && *extents != std::pair{img.width, img.height}) throw IoError("frame extents differ");
      extents = std::pair{img.width, img.height};
      clip.frames.push_back(to_planar_rgb(img, opts.height, opts.width));
    }
    clip.label = to_binary_mask(read_image(label_path->string()), opts.height, opts.width);
  } catch (const IoError& e) {
    throw fail(e.what());
  }
  clip.validate();
  return clip;
}

// Reads clips in index order, or in a seeded shuffled order.
class ClipStream {
 public:
  ClipStream(const fs::path& index_path, LoadOptions opts, std::optional<std::uint64_t> shuffle_seed = std::nullopt)
      : entries_(read_index(index_path)), base_(index_path.parent_path()), opts_(opts) {
    order_.resize(entries_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    if (shuffle_seed) {
      std::mt19937_64 rng(*shuffle_seed);
      std::shuffle(order_.begin(), order_.end(), rng);
    }
  }

  std::size_t size() const { return entries_.size(); }
  const std::vector<IndexEntry>& entries() const { return entries_; }

  std::optional<Clip> next() {
    if (pos_ >= order_.size()) return std::nullopt;
    return load_clip(entries_[order_[pos_++]], base_, opts_);
  }

 private:
  std::vector<IndexEntry> entries_;
  fs::path base_;
  LoadOptions opts_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

inline std::vector<Clip> load_dataset(const fs::path& index_path, const LoadOptions& opts) {
  ClipStream stream(index_path, opts);
  std::vector<Clip> out;
  while (auto clip = stream.next()) out.push_back(std::move(*clip));
  return out;
}

}  // namespace strada::data
