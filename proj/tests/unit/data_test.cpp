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

#include <gtest/gtest.h>
#include <png.h>

#include <cmath>
#include <functional>
#include <map>
#include <random>

#include "strada/data/dataset.hpp"
#include "strada/data/raster.hpp"
#include "strada/data/sampling.hpp"
#include "strada/data/synthetic.hpp"
#include "test_util.hpp"

namespace strada::data {
namespace {

using Mask = std::vector<std::uint8_t>;

std::vector<Image> numbered_frames(std::size_t n) {
  std::vector<Image> raw;
  for (std::size_t i = 1; i <= n; ++i) raw.emplace_back(3, 2, 1, static_cast<std::uint8_t>(10 * i));
  return raw;
}

TEST(Sampling, PublishedSchemes) {
  EXPECT_EQ(tusimple_scheme(1).indices, (std::vector<std::size_t>{1, 5, 10, 15, 20}));
  EXPECT_EQ(tusimple_scheme(2).indices, (std::vector<std::size_t>{2, 5, 9, 14, 20}));
  EXPECT_EQ(llamas_scheme(1).indices, (std::vector<std::size_t>{1, 2, 3, 4, 5}));
  EXPECT_EQ(llamas_scheme(2).indices, (std::vector<std::size_t>{1, 3, 6, 10, 15}));
  EXPECT_EQ(llamas_scheme(2).raw_length, 15u);
  EXPECT_THROW(tusimple_scheme(3), ConfigError);
  EXPECT_THROW(sampling_scheme("bogus"), ConfigError);
}

TEST(Sampling, IntervalsAtTwentyFramesPerSecond) {
  const auto spacing = [](const SamplingScheme& s) {
    std::vector<double> out;
    for (std::size_t i = 1; i < s.indices.size(); ++i) {
      out.push_back(std::round(static_cast<double>(s.indices[i] - s.indices[i - 1]) * 0.05 * 100) / 100);
    }
    return out;
  };
  EXPECT_EQ(spacing(tusimple_scheme(2)), (std::vector<double>{0.15, 0.2, 0.25, 0.3}));
}

TEST(Sampling, SelectsFramesInOrderAndLabelsTheLast) {
  const Image label(3, 2, 1, 255);
  for (const auto& scheme : {tusimple_scheme(1), tusimple_scheme(2), llamas_scheme(2), trailing_scheme(3, 20)}) {
    const Clip clip = sample_clip(numbered_frames(20), scheme, label, "raw");
    ASSERT_EQ(clip.frame_count(), scheme.indices.size());
    for (std::size_t k = 0; k < scheme.indices.size(); ++k) {
      EXPECT_FLOAT_EQ(clip.frames[k][0], static_cast<float>(10 * scheme.indices[k] / 255.0));
    }
    EXPECT_EQ(scheme.labeled_index(), scheme.indices.back());
    EXPECT_EQ(clip.label, Mask(6, 1));
  }
}

TEST(Sampling, Errors) {
  const Image label(3, 2, 1);
  EXPECT_THROW(sample_clip(numbered_frames(19), tusimple_scheme(1), label, "short"), ShapeError);
  SamplingScheme bad{"bad", {3, 3}, 5};
  EXPECT_THROW(bad.validate(), ConfigError);
  SamplingScheme out_of_range{"oob", {1, 6}, 5};
  EXPECT_THROW(out_of_range.validate(), ConfigError);
  EXPECT_THROW(trailing_scheme(0, 5), ConfigError);
}

std::size_t count(const Mask& m) { return static_cast<std::size_t>(std::count(m.begin(), m.end(), 1)); }

TEST(Raster, VerticalLineFillsOneColumn) {
  const auto m = rasterize_label({{{2, 0}, {2, 3}}}, 4, 4, 1.0);
  EXPECT_EQ(count(m), 4u);
  for (std::size_t y = 0; y < 4; ++y) EXPECT_EQ(m[y * 4 + 2], 1);
}

TEST(Raster, UnionStaysBinary) {
  const Polyline a{{1, 0}, {1, 7}}, b{{0, 3}, {7, 3}};
  const auto u = rasterize_label({a, b, a}, 8, 8, 1.0);
  const auto ma = rasterize_label({a}, 8, 8, 1.0), mb = rasterize_label({b}, 8, 8, 1.0);
  for (std::size_t i = 0; i < u.size(); ++i) EXPECT_EQ(u[i], ma[i] | mb[i]);
  EXPECT_EQ(count(u), 15u);
  EXPECT_EQ(count(rasterize_label({}, 8, 8, 2.0)), 0u);
}

// Brute force: distance from the pixel center to the closest point found by
// dense sampling of the segment.
bool near_segment(double px, double py, Point a, Point b, double r) {
  double best = 1e300;
  for (int i = 0; i <= 20000; ++i) {
    const double t = i / 20000.0;
    const double x = a.x + t * (b.x - a.x), y = a.y + t * (b.y - a.y);
    best = std::min(best, std::hypot(px - x, py - y));
  }
  return best <= r + 1e-9;
}

TEST(Raster, DiagonalMatchesDistanceOracle) {
  const auto m = rasterize_label({{{0, 0}, {3, 3}}}, 4, 4, 1.0);
  for (std::size_t y = 0; y < 4; ++y) {
    for (std::size_t x = 0; x < 4; ++x) {
      EXPECT_EQ(m[y * 4 + x], near_segment(x, y, {0, 0}, {3, 3}, 0.5) ? 1 : 0) << x << "," << y;
    }
  }
}

TEST(Raster, RandomSegmentsMatchDistanceOracle) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 11);
  for (int trial = 0; trial < 20; ++trial) {
    // Strokes whose radius lands exactly on a pixel distance are excluded by
    // the oracle slack; random endpoints make that measure-zero.
    const Point a{u(rng), u(rng)}, b{u(rng), u(rng)};
    const double width = 1.0 + trial % 3;
    const auto m = rasterize_label({{a, b}}, 12, 12, width);
    for (std::size_t y = 0; y < 12; ++y) {
      for (std::size_t x = 0; x < 12; ++x) {
        ASSERT_EQ(m[y * 12 + x], near_segment(x, y, a, b, width / 2) ? 1 : 0) << trial;
      }
    }
  }
}

TEST(Raster, MirrorSymmetry) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ux(0, 15), uy(0, 9);
  for (int trial = 0; trial < 50; ++trial) {
    Polyline line, mirrored;
    for (int i = 0; i < 4; ++i) {
      const Point p{ux(rng), uy(rng)};
      line.push_back(p);
      mirrored.push_back({15 - p.x, p.y});
    }
    const auto m = rasterize_label({line}, 16, 10, 2.0), mm = rasterize_label({mirrored}, 16, 10, 2.0);
    for (std::size_t y = 0; y < 10; ++y) {
      for (std::size_t x = 0; x < 16; ++x) ASSERT_EQ(m[y * 16 + x], mm[y * 16 + 15 - x]);
    }
  }
}

TEST(Raster, PointsOutsideAreClamped) {
  const auto m = rasterize_label({{{-5, 1}, {20, 1}}}, 4, 3, 1.0);
  EXPECT_EQ(count(m), 4u);
}

std::string write_png(const fs::path& path, const Image& img) {
  png_image p{};
  p.version = PNG_IMAGE_VERSION;
  p.width = static_cast<png_uint_32>(img.width);
  p.height = static_cast<png_uint_32>(img.height);
  p.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  EXPECT_TRUE(png_image_write_to_file(&p, path.c_str(), 0, img.pixels.data(), 0, nullptr));
  return path.string();
}

TEST(Image, PngAndPnmDecodeAlike) {
  const auto dir = testing::scratch_dir("image_codec");
  Image rgb(5, 3, 3);
  for (std::size_t i = 0; i < rgb.pixels.size(); ++i) rgb.pixels[i] = static_cast<std::uint8_t>(i * 17);
  EXPECT_EQ(read_image(write_png(dir / "a.png", rgb)), rgb);
  write_pnm((dir / "a.ppm").string(), rgb);
  EXPECT_EQ(read_image((dir / "a.ppm").string()), rgb);
  Image gray(4, 2, 1);
  gray.pixels = {0, 255, 7, 8, 9, 10, 11, 200};
  EXPECT_EQ(read_image(write_png(dir / "g.png", gray)), gray);
  write_pnm((dir / "g.pgm").string(), gray);
  EXPECT_EQ(read_image((dir / "g.pgm").string()), gray);
}

TEST(Image, CorruptInputsAreRejected) {
  const auto dir = testing::scratch_dir("image_corrupt");
  write_text(dir / "trunc.ppm", "P6\n4 4\n255\nabc");
  write_text(dir / "magic.ppm", "P3\n1 1\n255\n0 0 0\n");
  write_text(dir / "bad.png", std::string("\x89PNG\r\n\x1a\n", 8) + "garbage");
  for (const char* f : {"trunc.ppm", "magic.ppm", "bad.png", "missing.pgm"}) {
    EXPECT_THROW(read_image((dir / f).string()), IoError) << f;
  }
}

TEST(Image, ResizeKeepsMasksBinaryAndFramesInRange) {
  Image label(7, 5, 1);
  for (std::size_t i = 0; i < label.pixels.size(); ++i) label.pixels[i] = i % 3 ? 255 : 0;
  for (auto [h, w] : {std::pair{128, 256}, std::pair{3, 2}, std::pair{5, 7}}) {
    for (auto v : to_binary_mask(label, h, w)) EXPECT_LE(v, 1);
    for (auto v : to_planar_rgb(label, h, w)) {
      EXPECT_GE(v, 0.0f);
      EXPECT_LE(v, 1.0f);
    }
  }
  const auto same = to_planar_rgb(label, 5, 7);
  for (std::size_t i = 0; i < 35; ++i) EXPECT_EQ(same[i], static_cast<float>(label.pixels[i] / 255.0));
}

SyntheticSpec small_spec(std::uint64_t seed) {
  SyntheticSpec s;
  s.height = 32;
  s.width = 64;
  s.frames = 3;
  s.seed = seed;
  return s;
}

TEST(Synthetic, DeterministicInSeed) {
  const auto a = generate_synthetic(small_spec(3)), b = generate_synthetic(small_spec(3));
  EXPECT_EQ(a.frames, b.frames);
  EXPECT_EQ(a.label, b.label);
  EXPECT_EQ(a.clip.frames, b.clip.frames);
  EXPECT_NE(generate_synthetic(small_spec(4)).frames, a.frames);
  EXPECT_EQ(a.clip.id, "synth-3");
}

TEST(Synthetic, DefaultSpecSparsity) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SyntheticSpec s;
    s.seed = seed;
    const auto clip = generate_synthetic(s).clip;
    EXPECT_EQ(clip.height, 128u);
    EXPECT_EQ(clip.width, 256u);
    const double frac = static_cast<double>(count(clip.label)) / static_cast<double>(clip.label.size());
    EXPECT_GE(frac, 0.01) << seed;
    EXPECT_LE(frac, 0.04) << seed;
  }
}

TEST(Synthetic, StraightLanesMatchRasterizer) {
  auto s = small_spec(11);
  s.slope_max = 0;
  s.bend_max = 0;
  s.noise = 0;
  const auto out = generate_synthetic(s);
  std::vector<Polyline> analytic;
  for (const auto& lane : out.lanes) {
    ASSERT_EQ(lane.points.size(), 2u);
    EXPECT_EQ(lane.points[0].x, lane.points[1].x);
    analytic.push_back(lane.points);
  }
  EXPECT_EQ(out.clip.label, rasterize_label(analytic, s.width, s.height, s.stroke_width));
}

TEST(Synthetic, LastFrameOcclusionHidesLaneOnlyInLastFrame) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto s = occlusion_suite_spec();
    s.height = 64;
    s.width = 128;
    s.noise = 0;
    s.dashed_probability = 0;
    s.seed = seed;
    const auto out = generate_synthetic(s);
    ASSERT_EQ(out.occlusions.size(), 1u);
    const auto& rect = out.occlusions[0];
    EXPECT_EQ(rect.first_frame, s.frames);
    EXPECT_EQ(rect.last_frame, s.frames);
    std::size_t hidden_label = 0;
    for (std::size_t y = 0; y < s.height; ++y) {
      for (std::size_t x = 0; x < s.width; ++x) {
        if (!out.clip.label[y * s.width + x]) continue;
        const bool inside = x >= rect.x0 && x <= rect.x1 && y >= rect.y0 && y <= rect.y1;
        if (!inside) continue;
        ++hidden_label;
        const Image& last = out.frames.back();
        EXPECT_EQ(last.at(y, x, 0), 90) << "seed " << seed;
        // Solid lanes paint every label pixel in the earlier frames.
        for (std::size_t f = 0; f + 1 < s.frames; ++f) EXPECT_GE(out.frames[f].at(y, x, 0), 200);
      }
    }
    EXPECT_GT(hidden_label, 0u);
  }
}

TEST(Synthetic, SpecValidationAndJson) {
  auto s = small_spec(1);
  s.lanes_min = 0;
  EXPECT_THROW(generate_synthetic(s), ConfigError);
  const auto occl = occlusion_suite_spec();
  const auto back = synthetic_spec_from_json(to_json(occl), SyntheticSpec{});
  EXPECT_EQ(to_json(back).dump(), to_json(occl).dump());
  EXPECT_THROW(synthetic_preset("nope"), ConfigError);
}

fs::path write_dataset(const std::string& name, std::size_t n, std::size_t frames = 3) {
  const auto dir = testing::scratch_dir(name);
  auto s = small_spec(100);
  s.frames = frames;
  generate_dataset(s, n, dir);
  return dir;
}

TEST(Dataset, RoundTripIsBitIdentical) {
  const auto dir = write_dataset("ds_roundtrip", 3);
  LoadOptions opts{32, 64, 3, false};
  const auto clips = load_dataset(dir / "index.jsonl", opts);
  ASSERT_EQ(clips.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    auto s = small_spec(100 + i);
    const auto expected = generate_synthetic(s).clip;
    EXPECT_EQ(clips[i].id, expected.id);
    EXPECT_EQ(clips[i].frames, expected.frames);
    EXPECT_EQ(clips[i].label, expected.label);
  }
}

TEST(Dataset, ResizesToTargetExtents) {
  const auto dir = write_dataset("ds_resize", 1);
  const auto clips = load_dataset(dir / "index.jsonl", LoadOptions{});
  EXPECT_EQ(clips[0].frames[0].size(), 3u * 128 * 256);
  for (auto v : clips[0].label) EXPECT_LE(v, 1);
}

TEST(Dataset, ShuffleIsSeededPermutation) {
  const auto dir = write_dataset("ds_shuffle", 6);
  ClipStream a(dir / "index.jsonl", {32, 64}, 7), b(dir / "index.jsonl", {32, 64}, 7), plain(dir / "index.jsonl", {32, 64});
  EXPECT_EQ(a.entries(), b.entries());
  auto sorted = a.entries();
  std::sort(sorted.begin(), sorted.end(), [](auto& x, auto& y) { return x.id < y.id; });
  auto base = plain.entries();
  std::sort(base.begin(), base.end(), [](auto& x, auto& y) { return x.id < y.id; });
  EXPECT_EQ(sorted, base);
  std::size_t n = 0;
  while (a.next()) ++n;
  EXPECT_EQ(n, 6u);
}

void expect_error_names(const std::function<void()>& fn, const std::string& needle) {
  try {
    fn();
    ADD_FAILURE() << "expected an error mentioning " << needle;
  } catch (const std::exception& e) {
    EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
  }
}

TEST(Dataset, ErrorsNameTheClip) {
  const auto dir = write_dataset("ds_errors", 3);
  const auto index = dir / "index.jsonl";
  expect_error_names([&] { load_dataset(index, {32, 64, 5, false}); }, "synth-100");
  fs::remove(dir / "clip_0001" / "label.pgm");
  expect_error_names([&] { load_dataset(index, {32, 64}); }, "synth-101");
  write_text(dir / "clip_0002" / "frame_02.ppm", "P6\n64 32\n255\nxx");
  fs::remove_all(dir / "clip_0001");
  expect_error_names([&] { load_clip({"synth-102", "clip_0002"}, dir, {32, 64}); }, "synth-102");
  expect_error_names([&] { load_dataset(dir / "absent.jsonl", {}); }, "absent.jsonl");
  write_text(dir / "broken.jsonl", "{\"id\":\"a\",\"dir\":\"x\"}\nnot json\n");
  expect_error_names([&] { read_index(dir / "broken.jsonl"); }, "broken.jsonl:2");
}

TEST(Dataset, TakeLastKeepsTrailingFrames) {
  const auto dir = write_dataset("ds_take_last", 1, 4);
  const auto all = load_dataset(dir / "index.jsonl", {32, 64, 4, false});
  const auto tail = load_dataset(dir / "index.jsonl", {32, 64, 2, true});
  ASSERT_EQ(tail[0].frame_count(), 2u);
  EXPECT_EQ(tail[0].frames[0], all[0].frames[2]);
  EXPECT_EQ(tail[0].frames[1], all[0].frames[3]);
}

// Random byte damage to files on disk: the loader either throws a library
// error or yields a clip that satisfies every clip invariant.
TEST(Dataset, FuzzedFilesNeverYieldInvalidClips) {
  const auto dir = write_dataset("ds_fuzz", 1);
  const auto clip_dir = dir / "clip_0000";
  const std::vector<std::string> files{"frame_01.ppm", "frame_02.ppm", "label.pgm"};
  std::map<std::string, std::string> pristine;
  for (const auto& f : files) pristine[f] = read_text(clip_dir / f);
  std::mt19937_64 rng(77);
  std::size_t thrown = 0, loaded = 0;
  for (int trial = 0; trial < 200; ++trial) {
    for (const auto& f : files) write_text(clip_dir / f, pristine[f]);
    const auto& victim = files[rng() % files.size()];
    std::string bytes = pristine[victim];
    switch (rng() % 3) {
      case 0:
        bytes.resize(rng() % bytes.size());
        break;
      case 1:
        for (int k = 0; k < 4; ++k) bytes[rng() % std::min<std::size_t>(bytes.size(), 24)] = static_cast<char>(rng());
        break;
      default:
        for (int k = 0; k < 50; ++k) bytes[rng() % bytes.size()] = static_cast<char>(rng());
    }
    write_text(clip_dir / victim, bytes);
    try {
      const Clip c = load_clip({"synth-100", "clip_0000"}, dir, {32, 64});
      c.validate();
      ++loaded;
    } catch (const std::exception&) {
      ++thrown;
    }
  }
  EXPECT_EQ(thrown + loaded, 200u);
  EXPECT_GT(thrown, 0u);
}

}  // namespace
}  // namespace strada::data
