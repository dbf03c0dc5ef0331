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

#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "strada/convgru.hpp"
#include "strada/grad_check.hpp"
#include "strada/lane_net.hpp"
#include "strada/loss.hpp"
#include "strada/ops.hpp"

namespace strada {

struct GradSuiteOptions {
  double primitive_tolerance = 1e-6;
  double network_tolerance = 1e-3;
  double eps = 1e-4;
  // Smaller step for the full network: thousands of ReLU and pooling kinks
  // sit within 1e-4 of some sampled coordinate.
  double network_eps = 1e-6;
  bool include_network = true;
  // Scales every analytic gradient; 1 is a sound run, anything else plants a fault.
  double analytic_scale = 1.0;
  std::uint64_t seed = 0;
};

struct GradSuiteEntry {
  std::string name;
  double error = 0.0;
  double tolerance = 0.0;
  bool passed() const { return error <= tolerance; }
};

struct GradSuiteReport {
  std::vector<GradSuiteEntry> entries;
  bool passed() const {
    for (const auto& e : entries) {
      if (!e.passed()) return false;
    }
    return !entries.empty();
  }
  double max_error(bool network) const {
    double m = 0.0;
    for (const auto& e : entries) {
      if ((e.name == "lane_net.reduced") == network) m = std::max(m, e.error);
    }
    return m;
  }
};

namespace detail {

using D = Tensor<double>;

inline D uniform_param(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(shape.numel());
  for (auto& e : v) e = dist(rng);
  D t(shape, std::move(v));
  t.set_requires_grad(true);
  return t;
}

// Distinct values spaced 0.1 apart, so pooling argmaxes survive +-eps.
inline D spaced_param(Shape shape, std::mt19937_64& rng) {
  std::vector<double> v(shape.numel());
  std::iota(v.begin(), v.end(), 0.0);
  std::shuffle(v.begin(), v.end(), rng);
  for (double& e : v) e = 0.1 * e - 0.05 * static_cast<double>(shape.numel());
  D t(shape, std::move(v));
  t.set_requires_grad(true);
  return t;
}

// Random upstream weights in [0.5, 1.5] turn a tensor into a scalar.
inline D probe(const D& y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.5, 1.5);
  std::vector<double> w(y.numel());
  for (auto& e : w) e = dist(rng);
  return sum(mul(y, D(y.shape(), std::move(w))));
}

}  // namespace detail

// Finite-difference checks of every differentiable primitive, the GRU cell
// and (optionally) a reduced full network in 64-bit arithmetic.
inline GradSuiteReport run_gradient_suite(const GradSuiteOptions& options = {}) {
  using detail::D;
  GradSuiteReport report;
  std::mt19937_64 rng(options.seed + 20);
  GradCheckOptions gc;
  gc.eps = options.eps;
  gc.analytic_scale = options.analytic_scale;
  const auto run = [&](const std::string& name, const std::function<D()>& program, const std::vector<D>& params,
                       double tolerance, GradCheckOptions opts) {
    report.entries.push_back({name, grad_check(program, params, opts).max_error, tolerance});
  };
  const auto prim = [&](const std::string& name, const std::function<D()>& program, const std::vector<D>& params) {
    run(name, program, params, options.primitive_tolerance, gc);
  };
  const auto u = [&](Shape s, double lo = -1.0, double hi = 1.0) { return detail::uniform_param(s, rng, lo, hi); };

  {
    auto x = u({2, 3, 5, 6}), w = u({4, 3, 3, 3}), b = u({1, 4, 1, 1}), w1 = u({2, 3, 1, 1});
    prim("conv2d.3x3", [=] { return detail::probe(conv2d(x, w, b, 1, 1), 1); }, {x, w, b});
    prim("conv2d.stride2", [=] { return detail::probe(conv2d(x, w, b, 2, 0), 2); }, {x, w, b});
    prim("conv2d.1x1", [=] { return detail::probe(conv2d(x, w1, D{}, 1, 0), 3); }, {x, w1});
  }
  {
    auto x = detail::spaced_param({2, 2, 4, 6}, rng);
    prim("max_pool2d", [=] { return detail::probe(max_pool2d(x), 4); }, {x});
  }
  {
    auto x = u({2, 3, 2, 3}), w = u({3, 2, 2, 2});
    prim("upsample.nearest", [=] { return detail::probe(upsample2x(x, UpsampleMode::kNearest), 5); }, {x});
    prim("upsample.tconv", [=] { return detail::probe(upsample2x(x, UpsampleMode::kTransposedConv, w), 6); }, {x, w});
  }
  {
    auto x = u({3, 2, 3, 3}), g = u({1, 2, 1, 1}, 0.5, 1.5), b = u({1, 2, 1, 1});
    auto train_stats = std::make_shared<BatchNormStats<double>>(2);
    auto eval_stats = std::make_shared<BatchNormStats<double>>(2);
    eval_stats->mean = {0.3, -0.2};
    eval_stats->var = {1.7, 0.6};
    prim("batch_norm.train",
         [=] { return detail::probe(batch_norm2d(x, g, b, *train_stats, NormMode::kTrain), 7); }, {x, g, b});
    prim("batch_norm.eval", [=] { return detail::probe(batch_norm2d(x, g, b, *eval_stats, NormMode::kEval), 8); },
         {x, g, b});
  }
  {
    auto x = u({1, 2, 4, 4}, -3, 3);
    for (double& v : x.values()) v += v >= 0 ? 0.1 : -0.1;  // away from the relu kink
    prim("relu", [=] { return detail::probe(relu(x), 9); }, {x});
    prim("sigmoid", [=] { return detail::probe(sigmoid(x), 10); }, {x});
    prim("tanh", [=] { return detail::probe(tanh(x), 11); }, {x});
  }
  {
    const Shape s{2, 2, 3, 3};
    auto a = u(s), b = u(s), z = u(s, 0.05, 0.95);
    prim("add", [=] { return detail::probe(add(a, b), 12); }, {a, b});
    prim("mul", [=] { return detail::probe(mul(a, b), 13); }, {a, b});
    prim("scale", [=] { return detail::probe(scale(a, -2.5), 14); }, {a});
    prim("gated_blend", [=] { return detail::probe(gated_blend(z, a, b), 15); }, {z, a, b});
    prim("concat_channels", [=] { return detail::probe(concat_channels(a, b), 16); }, {a, b});
    prim("softmax_channels", [=] { return detail::probe(softmax_channels(a), 17); }, {a});
    prim("sum", [=] { return sum(a); }, {a});
  }
  {
    auto logits = u({2, 2, 3, 4}, -2, 2);
    std::vector<std::uint8_t> mask(2 * 12);
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = (i * 7) % 5 == 0;
    prim("cross_entropy", [=] { return cross_entropy_loss(logits, std::span<const std::uint8_t>(mask), {3.0, 0.5}); },
         {logits});
  }
  {
    auto cell = ConvGruCell<double>::create(2, 3, rng);
    for (auto* b : {&cell.b_z, &cell.b_r, &cell.b_h}) *b = u(b->shape(), -0.5, 0.5);
    auto x = u({2, 2, 4, 4}), h = u({2, 2, 4, 4});
    std::vector<D> params{x, h};
    for (auto& p : cell.named_parameters("")) params.push_back(p.tensor);
    prim("conv_gru.step", [=] { return detail::probe(gru_step(cell, x, h), 18); }, params);
  }
  if (options.include_network) {
    NetworkConfig c = NetworkConfig{}.with_width_divisor(8);
    c.height = 32;
    c.width = 64;
    c.frames = 2;
    c.seed = options.seed;
    auto net = std::make_shared<LaneNet<double>>(LaneNet<double>::build(c));
    std::vector<D> clip;
    for (std::size_t k = 0; k < c.frames; ++k) {
      D f = detail::uniform_param({2, 3, c.height, c.width}, rng, 0, 1);
      f.set_requires_grad(false);
      clip.push_back(f);
    }
    std::vector<std::uint8_t> mask(2 * c.height * c.width);
    for (auto& m : mask) m = rng() % 10 == 0;
    GradCheckOptions net_opts = gc;
    net_opts.max_coords_per_tensor = 6;
    net_opts.eps = options.network_eps;
    net_opts.seed = options.seed + 3;
    run("lane_net.reduced",
        [=] { return cross_entropy_loss(net->forward(clip), std::span<const std::uint8_t>(mask)); },
        net->parameter_tensors(), options.network_tolerance, net_opts);
  }
  return report;
}

}  // namespace strada
