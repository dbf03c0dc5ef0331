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

#include <filesystem>

#include "strada/checkpoint.hpp"
#include "strada/data/synthetic.hpp"
#include "strada/train.hpp"
#include "test_util.hpp"

namespace strada {
namespace {

NetworkConfig tiny(std::size_t k = 2) {
  NetworkConfig c = NetworkConfig{}.with_width_divisor(8);
  c.height = 32;
  c.width = 64;
  c.frames = k;
  return c;
}

std::vector<data::Clip> clips(std::size_t n, std::size_t k = 2, std::uint64_t seed = 10) {
  std::vector<data::Clip> out;
  for (std::size_t i = 0; i < n; ++i) {
    data::SyntheticSpec s;
    s.height = 32;
    s.width = 64;
    s.frames = k;
    s.seed = seed + i;
    out.push_back(data::generate_synthetic(s).clip);
  }
  return out;
}

TrainConfig steps(std::size_t n, std::size_t batch = 2) {
  TrainConfig t;
  t.max_steps = n;
  t.batch_size = batch;
  return t;
}

TEST(Train, ConfigValidation) {
  TrainConfig t = steps(1);
  EXPECT_NO_THROW(t.validate());
  t.batch_size = 0;
  EXPECT_THROW(t.validate(), ConfigError);
  t = steps(1);
  t.learning_rate = 0;
  EXPECT_THROW(t.validate(), ConfigError);
  t = steps(1);
  t.optimizer.beta1 = 1.0;
  EXPECT_THROW(t.validate(), ConfigError);
  t = steps(0);
  EXPECT_THROW(t.validate(), ConfigError);
  const TrainConfig defaults;
  EXPECT_EQ(defaults.batch_size, 6u);
  EXPECT_EQ(defaults.learning_rate, 1e-3);
  EXPECT_EQ(defaults.optimizer.kind, OptimizerKind::kRAdam);
  EXPECT_EQ(defaults.class_weights.lane, 1.0);
  EXPECT_EQ(defaults.grad_clip, 0.0);
  EXPECT_EQ(defaults.optimizer.weight_decay, 0.0);
  EXPECT_EQ(defaults.lr_schedule, LrSchedule::kConstant);
}

TEST(Train, EpochBatchesCoverEveryClipAndKeepPartialBatch) {
  const auto batches = epoch_batches(7, 3, 42, 0);
  ASSERT_EQ(batches.size(), 3u);
  EXPECT_EQ(batches[2].size(), 1u);
  std::vector<std::size_t> seen;
  for (const auto& b : batches) seen.insert(seen.end(), b.begin(), b.end());
  std::sort(seen.begin(), seen.end());
  EXPECT_EQ(seen, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(epoch_batches(7, 3, 42, 0), batches);
  EXPECT_NE(epoch_batches(7, 3, 42, 1), batches);
}

TEST(Train, ZeroLearningRateLeavesParametersBitIdentical) {
  // TrainConfig requires lr > 0, so the zero step goes through the optimizer directly.
  auto net = LaneNet<float>::build(tiny());
  const auto before = net.state_entries();
  const auto data = clips(2);
  std::vector<std::size_t> idx{0, 1};
  const auto batch = make_batch<float>(data, idx);
  Optimizer<float> opt(net.parameter_tensors(), OptimizerConfig{});
  net.set_mode(NormMode::kTrain);
  backward(cross_entropy_loss(net.forward(batch.frames), std::span<const std::uint8_t>(batch.mask)));
  opt.step(0.0);
  const auto params_after = net.parameters();
  for (std::size_t i = 0; i < params_after.size(); ++i) {
    std::vector<float> b(before[i].values.begin(), before[i].values.end());
    EXPECT_EQ(params_after[i].tensor.values(), b) << params_after[i].name;
  }
}

TEST(Train, SameSeedSameLossCurveBitForBit) {
  const auto data = clips(5);
  std::vector<double> curves[2];
  std::vector<ContainerEntry> states[2];
  for (int run = 0; run < 2; ++run) {
    auto net = LaneNet<float>::build(tiny());
    Trainer<float> trainer(net, steps(10));
    for (const auto& r : trainer.run(data)) curves[run].push_back(r.loss);
    states[run] = net.state_entries();
  }
  EXPECT_EQ(curves[0], curves[1]);
  ASSERT_EQ(states[0].size(), states[1].size());
  for (std::size_t i = 0; i < states[0].size(); ++i) EXPECT_EQ(states[0][i].values, states[1][i].values);
}

TEST(Train, DescentOnFixedTinyBatch) {
  auto data = clips(2);
  auto net = LaneNet<float>::build(tiny());
  Trainer<float> trainer(net, steps(50));
  const auto log = trainer.run(data);
  ASSERT_EQ(log.size(), 50u);
  EXPECT_LT(log.back().loss, log.front().loss);
}

TEST(Train, FrameCountMismatchNamesClip) {
  auto net = LaneNet<float>::build(tiny(2));
  Trainer<float> trainer(net, steps(1));
  try {
    trainer.run(clips(2, 3));
    FAIL() << "expected a ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("synth-10"), std::string::npos) << e.what();
  }
  EXPECT_THROW(trainer.run({}), ConfigError);
}

TEST(Train, EpochBudgetAndCheckpointCadence) {
  auto net = LaneNet<float>::build(tiny());
  TrainConfig t = steps(0, 2);
  t.epochs = 2;
  t.checkpoint_every = 2;
  Trainer<float> trainer(net, t);
  std::vector<std::size_t> saves;
  TrainCallbacks cb;
  cb.on_checkpoint = [&](std::size_t s) { saves.push_back(s); };
  const auto log = trainer.run(clips(5), cb);
  EXPECT_EQ(log.size(), 6u);  // ceil(5/2) batches per epoch
  EXPECT_EQ(saves, (std::vector<std::size_t>{2, 4}));
}

TEST(Train, ResumeFromCheckpointMatchesUninterruptedRun) {
  const auto data = clips(4);
  const auto dir = testing::scratch_dir("resume");
  auto straight = LaneNet<float>::build(tiny());
  Trainer<float> t1(straight, steps(6));
  t1.run(data);

  auto first = LaneNet<float>::build(tiny());
  Trainer<float> t2(first, steps(3));
  t2.run(data);
  save_checkpoint((dir / "ck").string(), first, &t2.optimizer());

  auto resumed = load_network<float>((dir / "ck").string());
  Trainer<float> t3(resumed, steps(6));
  load_optimizer_state((dir / "ck").string(), resumed, t3.optimizer());
  EXPECT_EQ(t3.global_step(), 3u);
  EXPECT_EQ(t3.run(data).size(), 3u);
  const auto a = straight.state_entries(), b = resumed.state_entries();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].values, b[i].values) << a[i].name;
}

TEST(Train, GradClipBoundsGlobalNorm) {
  auto net = LaneNet<float>::build(tiny());
  TrainConfig t = steps(1);
  t.grad_clip = 1e-3;
  t.optimizer.kind = OptimizerKind::kSgd;
  Trainer<float> trainer(net, t);
  const auto data = clips(2);
  std::vector<std::size_t> idx{0, 1};
  trainer.step(make_batch<float>(data, idx));
  double sq = 0;
  for (const auto& p : net.parameter_tensors()) {
    if (p.has_grad()) for (float g : p.grad()) sq += double(g) * g;
  }
  EXPECT_LE(std::sqrt(sq), 1e-3 * (1 + 1e-5));
}

TEST(Train, StepScheduleDecays) {
  TrainConfig t = steps(1);
  t.lr_schedule = LrSchedule::kStep;
  t.lr_step_size = 10;
  t.lr_gamma = 0.5;
  EXPECT_EQ(t.lr_at(1), 1e-3);
  EXPECT_EQ(t.lr_at(10), 1e-3);
  EXPECT_EQ(t.lr_at(11), 5e-4);
}

TEST(Train, CsvLog) {
  EXPECT_EQ(csv_header(), "step,loss,lr,seconds\n");
  EXPECT_EQ(csv_row({3, 0.5, 0.001, 1.25}), "3,0.5,0.001,1.250\n");
}

TEST(Checkpoint, SidecarRecordsConfigAndStep) {
  const auto dir = testing::scratch_dir("ckpt");
  auto net = LaneNet<float>::build(tiny());
  Trainer<float> trainer(net, steps(2));
  trainer.run(clips(2));
  save_checkpoint((dir / "model").string(), net, &trainer.optimizer());
  EXPECT_TRUE(std::filesystem::exists(dir / "model.strd"));
  EXPECT_TRUE(std::filesystem::exists(dir / "model.optim.strd"));
  const auto meta = read_checkpoint_meta((dir / "model").string());
  EXPECT_EQ(meta.global_step, 2u);
  EXPECT_EQ(meta.network, tiny());
  EXPECT_EQ(meta.optimizer_state_version, kOptimizerStateVersion);
  EXPECT_THROW(read_checkpoint_meta((dir / "missing").string()), IoError);
}

}  // namespace
}  // namespace strada
