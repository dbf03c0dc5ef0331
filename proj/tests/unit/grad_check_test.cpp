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

#include "strada/check_suite.hpp"
#include "strada/grad_check.hpp"
#include "strada/ops.hpp"
#include "test_util.hpp"

namespace strada {
namespace {

using D = Tensor<double>;

TEST(GradCheck, LinearProgramIsExact) {
  std::mt19937_64 rng(1);
  auto x = testing::param(Shape{1, 2, 3, 3}, rng);
  const auto w = testing::probe_weights(x.shape());
  const auto r = grad_check([&] { return sum(mul(x, w)); }, {x});
  EXPECT_LE(r.max_error, 1e-10);
  EXPECT_EQ(r.coords_checked, x.numel());
}

TEST(GradCheck, PlantedScaleFaultIsReported) {
  std::mt19937_64 rng(2);
  auto x = testing::param(Shape{1, 2, 4, 4}, rng), w = testing::param(Shape{2, 2, 3, 3}, rng);
  GradCheckOptions opts;
  opts.analytic_scale = 2.0;
  const auto r = grad_check([&] { return sum(sigmoid(conv2d(x, w, D{}, 1, 1))); }, {x, w}, opts);
  EXPECT_NEAR(r.max_error, 1.0, 1e-6);
}

TEST(GradCheck, SubsamplingIsSeededAndBounded) {
  std::mt19937_64 rng(3);
  auto x = testing::param(Shape{1, 4, 6, 6}, rng);
  GradCheckOptions opts;
  opts.max_coords_per_tensor = 10;
  opts.seed = 5;
  const auto program = [&] { return sum(tanh(x)); };
  const auto a = grad_check(program, {x}, opts);
  const auto b = grad_check(program, {x}, opts);
  EXPECT_EQ(a.coords_checked, 10u);
  EXPECT_EQ(a.max_error, b.max_error);
  EXPECT_LE(a.max_error, 1e-6);
}

TEST(GradCheck, ZeroGradientTensorDoesNotBlowUp) {
  std::mt19937_64 rng(4);
  auto x = testing::param(Shape{1, 1, 2, 2}, rng), unused = testing::param(Shape{1, 1, 2, 2}, rng);
  const auto r = grad_check([&] { return sum(mul(x, x)); }, {x, unused});
  EXPECT_LE(r.max_error, 1e-8);
  ASSERT_EQ(r.per_tensor.size(), 2u);
  EXPECT_EQ(r.per_tensor[1], 0.0);
}

TEST(GradientSuite, EveryPrimitivePasses) {
  GradSuiteOptions opts;
  opts.include_network = false;
  const auto r = run_gradient_suite(opts);
  EXPECT_TRUE(r.passed());
  EXPECT_GE(r.entries.size(), 20u);
  for (const auto& e : r.entries) EXPECT_LE(e.error, 1e-6) << e.name;
}

TEST(GradientSuite, PlantedFaultFailsEveryEntry) {
  GradSuiteOptions opts;
  opts.include_network = false;
  opts.analytic_scale = 2.0;
  const auto r = run_gradient_suite(opts);
  EXPECT_FALSE(r.passed());
  for (const auto& e : r.entries) EXPECT_NEAR(e.error, 1.0, 1e-3) << e.name;
}

}  // namespace
}  // namespace strada
