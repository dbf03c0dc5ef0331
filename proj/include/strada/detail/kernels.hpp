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

#include <Eigen/Core>
#include <algorithm>
#include <cstddef>
#include <cstring>

namespace strada::detail {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixView = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixView = Eigen::Map<const RowMatrix<T>>;

template <typename T>
MatrixView<T> view(T* p, std::size_t rows, std::size_t cols) {
  return MatrixView<T>(p, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
template <typename T>
ConstMatrixView<T> view(const T* p, std::size_t rows, std::size_t cols) {
  return ConstMatrixView<T>(p, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

// Eigen chooses its vectorized peeling from buffer addresses, so a product
// over std::vector storage can differ in the last bit between runs. Products
// run on Eigen-owned (aligned) copies to stay bitwise reproducible.
template <typename T>
RowMatrix<T> owned(const T* p, std::size_t rows, std::size_t cols) {
  return view(p, rows, cols);
}

template <typename T>
void store(const RowMatrix<T>& m, T* dst, bool accumulate) {
  const T* src = m.data();
  const auto n = static_cast<std::size_t>(m.size());
  if (accumulate) {
    for (std::size_t i = 0; i < n; ++i) dst[i] += src[i];
  } else {
    std::memcpy(dst, src, n * sizeof(T));
  }
}

struct ConvGeometry {
  std::size_t channels, height, width;
  std::size_t kernel, stride, pad;
  std::size_t out_height, out_width;

  std::size_t rows() const { return channels * kernel * kernel; }
  std::size_t cols() const { return out_height * out_width; }
};

// Lowers one image (C,H,W) into a (C*k*k, Ho*Wo) patch matrix; row order
// matches a (O,C,k,k) weight flattened row-major.
template <typename T>
void im2col(const T* image, const ConvGeometry& g, T* cols) {
  const std::size_t k = g.kernel, s = g.stride;
  const auto pad = static_cast<std::ptrdiff_t>(g.pad);
  const auto h = static_cast<std::ptrdiff_t>(g.height), w = static_cast<std::ptrdiff_t>(g.width);
  for (std::size_t c = 0; c < g.channels; ++c) {
    const T* plane = image + c * g.height * g.width;
    for (std::size_t ki = 0; ki < k; ++ki) {
      for (std::size_t kj = 0; kj < k; ++kj) {
        T* dst = cols + ((c * k + ki) * k + kj) * g.cols();
        for (std::size_t oy = 0; oy < g.out_height; ++oy) {
          T* row = dst + oy * g.out_width;
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * s + ki) - pad;
          if (iy < 0 || iy >= h) {
            std::fill(row, row + g.out_width, T(0));
            continue;
          }
          const T* src = plane + iy * w;
          for (std::size_t ox = 0; ox < g.out_width; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * s + kj) - pad;
            row[ox] = (ix >= 0 && ix < w) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-adds a patch matrix back into an image.
template <typename T>
void col2im(const T* cols, const ConvGeometry& g, T* image) {
  const std::size_t k = g.kernel, s = g.stride;
  const auto pad = static_cast<std::ptrdiff_t>(g.pad);
  const auto h = static_cast<std::ptrdiff_t>(g.height), w = static_cast<std::ptrdiff_t>(g.width);
  for (std::size_t c = 0; c < g.channels; ++c) {
    T* plane = image + c * g.height * g.width;
    for (std::size_t ki = 0; ki < k; ++ki) {
      for (std::size_t kj = 0; kj < k; ++kj) {
        const T* src = cols + ((c * k + ki) * k + kj) * g.cols();
        for (std::size_t oy = 0; oy < g.out_height; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * s + ki) - pad;
          if (iy < 0 || iy >= h) continue;
          const T* row = src + oy * g.out_width;
          T* dst = plane + iy * w;
          for (std::size_t ox = 0; ox < g.out_width; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * s + kj) - pad;
            if (ix >= 0 && ix < w) dst[ix] += row[ox];
          }
        }
      }
    }
  }
}

}  // namespace strada::detail
