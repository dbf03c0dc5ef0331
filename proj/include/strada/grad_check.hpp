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
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "strada/tensor.hpp"

namespace strada {

struct GradCheckOptions {
  double eps = 1e-4;
  // 0 checks every coordinate; otherwise a seeded sample of this many per tensor.
  std::size_t max_coords_per_tensor = 0;
  std::uint64_t seed = 0;
  // Multiplies the analytic gradient before comparison. Anything other than 1
  // plants a fault, which the checker must report.
  double analytic_scale = 1.0;
};

struct GradCheckResult {
  double max_error = 0.0;
  std::vector<double> per_tensor;
  std::size_t coords_checked = 0;
};

// Compares reverse-mode gradients of a scalar program with central
// differences (f(p+eps) - f(p-eps)) / (2 eps).
//
// The error for one tensor is max|analytic - numeric| divided by the larger of
// max|numeric| over that tensor and 1e-3 of max|numeric| over all tensors, so
// an analytic gradient scaled by s reports |s - 1| and coordinates whose true
// gradient is zero (biases ahead of a normalization) cannot blow up the ratio.
template <typename Program>
GradCheckResult grad_check(Program&& program, const std::vector<Tensor<double>>& params,
                           const GradCheckOptions& options = {}) {
  std::vector<Tensor<double>> leaves = params;
  for (auto& p : leaves) {
    p.set_requires_grad(true);
    if (p.has_grad()) p.zero_grad();
  }
  {
    Tensor<double> loss = program();
    backward(loss);
  }

  std::mt19937_64 rng(options.seed);
  std::vector<std::vector<double>> analytic(leaves.size()), numeric(leaves.size());
  GradCheckResult result;
  double global_scale = 0.0;
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    auto& p = leaves[i];
    std::vector<std::size_t> coords(p.numel());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (options.max_coords_per_tensor > 0 && coords.size() > options.max_coords_per_tensor) {
      std::vector<std::size_t> picked;
      std::sample(coords.begin(), coords.end(), std::back_inserter(picked),
                  options.max_coords_per_tensor, rng);
      coords = std::move(picked);
    }
    NoGradGuard no_grad;
    for (std::size_t idx : coords) {
      const double a = p.has_grad() ? p.grad()[idx] * options.analytic_scale : 0.0;
      double& slot = p.values()[idx];
      const double saved = slot;
      slot = saved + options.eps;
      const double up = program().item();
      slot = saved - options.eps;
      const double down = program().item();
      slot = saved;
      const double n = (up - down) / (2.0 * options.eps);
      analytic[i].push_back(a);
      numeric[i].push_back(n);
      global_scale = std::max(global_scale, std::abs(n));
    }
    result.coords_checked += coords.size();
  }

  for (std::size_t i = 0; i < leaves.size(); ++i) {
    double diff = 0.0, scale = 0.0;
    for (std::size_t j = 0; j < analytic[i].size(); ++j) {
      diff = std::max(diff, std::abs(analytic[i][j] - numeric[i][j]));
      scale = std::max(scale, std::abs(numeric[i][j]));
    }
    const double denom = std::max({scale, 1e-3 * global_scale, 1e-12});
    result.per_tensor.push_back(diff / denom);
    result.max_error = std::max(result.max_error, diff / denom);
  }
  return result;
}

}  // namespace strada
