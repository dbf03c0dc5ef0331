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

#include <sstream>

#include "strada/serialize.hpp"
#include "test_util.hpp"

namespace strada {
namespace {

TEST(Container, ByteLayout) {
  Tensor<float> t(Shape{1, 1, 1, 2}, std::vector<float>{1.0f, -2.0f});
  std::ostringstream out;
  write_container(out, {make_entry("ab", t)});
  const std::string bytes = out.str();
  const std::string expect_head = std::string("STRD") + std::string("\x01\x00\x00\x00", 4) +
                                  std::string("\x01\x00\x00\x00", 4) + std::string("\x02\x00", 2) + "ab" +
                                  std::string("\x00", 1);
  ASSERT_EQ(bytes.size(), expect_head.size() + 16 + 8);
  EXPECT_EQ(bytes.substr(0, expect_head.size()), expect_head);
  const std::string extents = bytes.substr(expect_head.size(), 16);
  EXPECT_EQ(extents, std::string("\x01\0\0\0\x01\0\0\0\x01\0\0\0\x02\0\0\0", 16));
  // 1.0f = 0x3f800000, -2.0f = 0xc0000000, little-endian.
  EXPECT_EQ(bytes.substr(expect_head.size() + 16), std::string("\0\0\x80\x3f\0\0\0\xc0", 8));
}

TEST(Container, RoundTripBothPrecisions) {
  std::mt19937_64 rng(1);
  const auto f = testing::random_tensor<float>(Shape{2, 3, 4, 5}, rng);
  const auto d = testing::random_tensor<double>(Shape{1, 7, 1, 1}, rng);
  std::stringstream io;
  write_container(io, {make_entry("conv1_1.weight", f), make_entry("fcgru.b", d)});
  const auto back = read_container(io);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].name, "conv1_1.weight");
  EXPECT_EQ(back[0].dtype, DType::kF32);
  EXPECT_EQ(back[0].shape, f.shape());
  for (std::size_t i = 0; i < f.numel(); ++i) EXPECT_EQ(static_cast<float>(back[0].values[i]), f.values()[i]);
  EXPECT_EQ(back[1].dtype, DType::kF64);
  EXPECT_EQ(back[1].values, d.values());
}

TEST(Container, RejectsCorruptInput) {
  std::istringstream bad_magic("STRX\x01\0\0\0\0\0\0\0");
  EXPECT_THROW(read_container(bad_magic), IoError);
  std::istringstream bad_version(std::string("STRD\x02\0\0\0\0\0\0\0", 12));
  EXPECT_THROW(read_container(bad_version), IoError);
  std::ostringstream out;
  write_container(out, {make_entry("x", Tensor<double>(Shape{1, 1, 2, 2}, 1.0))});
  std::istringstream truncated(out.str().substr(0, out.str().size() - 3));
  EXPECT_THROW(read_container(truncated), IoError);
  EXPECT_THROW(load_container("/nonexistent/strada.strd"), IoError);
}

}  // namespace
}  // namespace strada
