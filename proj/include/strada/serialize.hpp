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
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

#include "strada/error.hpp"
#include "strada/tensor.hpp"

namespace strada {

// Flat binary tensor container:
//   "STRD" | version u32 | count u32 | entries...
//   entry: name_len u16 | name bytes | dtype u8 | 4 x u32 extents | payload
// All integers and elements are little-endian; payload is row-major (B,C,H,W).
inline constexpr std::array<char, 4> kContainerMagic = {'S', 'T', 'R', 'D'};
inline constexpr std::uint32_t kContainerVersion = 1;

enum class DType : std::uint8_t { kF32 = 0, kF64 = 1 };

template <typename T>
constexpr DType dtype_of() {
  static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
  return std::is_same_v<T, float> ? DType::kF32 : DType::kF64;
}

// Values are held widened to double; f32 entries round-trip exactly.
struct ContainerEntry {
  std::string name;
  DType dtype = DType::kF32;
  Shape shape;
  std::vector<double> values;
};

template <typename T>
ContainerEntry make_entry(std::string name, const Tensor<T>& t) {
  return {std::move(name), dtype_of<T>(), t.shape(),
          std::vector<double>(t.values().begin(), t.values().end())};
}

template <typename T>
ContainerEntry make_entry(std::string name, Shape shape, const std::vector<T>& values) {
  return {std::move(name), dtype_of<T>(), shape, std::vector<double>(values.begin(), values.end())};
}

namespace detail {

template <typename U>
void put_le(std::ostream& out, U value) {
  static_assert(std::is_trivially_copyable_v<U>);
  using Bits = std::conditional_t<sizeof(U) == 8, std::uint64_t,
                                  std::conditional_t<sizeof(U) == 4, std::uint32_t,
                                                     std::conditional_t<sizeof(U) == 2, std::uint16_t,
                                                                        std::uint8_t>>>;
  Bits bits;
  std::memcpy(&bits, &value, sizeof(U));
  char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  out.write(bytes, sizeof(U));
}

template <typename U>
U get_le(std::istream& in) {
  using Bits = std::conditional_t<sizeof(U) == 8, std::uint64_t,
                                  std::conditional_t<sizeof(U) == 4, std::uint32_t,
                                                     std::conditional_t<sizeof(U) == 2, std::uint16_t,
                                                                        std::uint8_t>>>;
  unsigned char bytes[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U))) {
    throw IoError("tensor container: unexpected end of data");
  }
  Bits bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<Bits>(bytes[i]) << (8 * i);
  U value;
  std::memcpy(&value, &bits, sizeof(U));
  return value;
}

}  // namespace detail

inline void write_container(std::ostream& out, const std::vector<ContainerEntry>& entries) {
  out.write(kContainerMagic.data(), kContainerMagic.size());
  detail::put_le<std::uint32_t>(out, kContainerVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(entries.size()));
  for (const auto& e : entries) {
    if (e.name.size() > 0xFFFF) throw IoError("tensor container: name too long: " + e.name);
    if (e.values.size() != e.shape.numel()) {
      throw ShapeError("tensor container: entry " + e.name + " has inconsistent extents");
    }
    detail::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(e.dtype));
    for (std::size_t d : e.shape.dims) detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    for (double v : e.values) {
      if (e.dtype == DType::kF32) {
        detail::put_le<float>(out, static_cast<float>(v));
      } else {
        detail::put_le<double>(out, v);
      }
    }
  }
  if (!out) throw IoError("tensor container: write failed");
}

inline std::vector<ContainerEntry> read_container(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kContainerMagic) {
    throw IoError("tensor container: bad magic");
  }
  const auto version = detail::get_le<std::uint32_t>(in);
  if (version != kContainerVersion) {
    throw IoError("tensor container: unsupported version " + std::to_string(version));
  }
  const auto count = detail::get_le<std::uint32_t>(in);
  std::vector<ContainerEntry> entries;
  entries.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    ContainerEntry e;
    e.name.resize(detail::get_le<std::uint16_t>(in));
    if (!in.read(e.name.data(), static_cast<std::streamsize>(e.name.size()))) {
      throw IoError("tensor container: truncated name");
    }
    const auto dtype = detail::get_le<std::uint8_t>(in);
    if (dtype > 1) throw IoError("tensor container: unknown dtype for " + e.name);
    e.dtype = static_cast<DType>(dtype);
    for (auto& d : e.shape.dims) d = detail::get_le<std::uint32_t>(in);
    if (e.shape.numel() > (std::size_t{1} << 31)) throw IoError("tensor container: implausible extents for " + e.name);
    e.values.resize(e.shape.numel());
    for (double& v : e.values) {
      v = e.dtype == DType::kF32 ? static_cast<double>(detail::get_le<float>(in))
                                 : detail::get_le<double>(in);
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

inline void save_container(const std::string& path, const std::vector<ContainerEntry>& entries) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_container(out, entries);
}

inline std::vector<ContainerEntry> load_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return read_container(in);
}

}  // namespace strada
