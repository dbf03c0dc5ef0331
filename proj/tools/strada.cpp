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

#include <CLI11.hpp>

#include <iostream>

#include "strada/cli/commands.hpp"

namespace {

using namespace strada::cli;

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "Run config JSON (network, train, data, eval)");
  cmd->add_option("--seed", f.seed, "Seed for network init and batch order");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--k", f.k, "Frames per clip (K)");
  cmd->add_option("--fcgru-location", f.fcgru_location, "none, conv1_2 ... conv5_2");
  cmd->add_flag("--no-fcgru", f.no_fcgru, "Disable the front GRU");
  cmd->add_flag("--no-mcgru", f.no_mcgru, "Disable the middle GRUs");
  cmd->add_option("--precision", f.precision, "f32 or f64");
  cmd->add_option("--upsample", f.upsample, "tconv or nearest");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"strada: spatio-temporal lane segmentation toolkit"};
  app.require_subcommand(1);

  CommonFlags common;
  std::optional<std::string> train_data, test_data;
  bool take_last = false;

  GenDataOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic clip dataset");
  gen_cmd->add_option("--spec", gen.spec_file, "Synthetic spec JSON (overrides the preset)");
  gen_cmd->add_option("--preset", gen.preset, "default or occlusion");
  gen_cmd->add_option("--count", gen.count, "Number of clips");
  gen_cmd->add_option("--seed", gen.seed, "Base seed (clip i uses seed + i)");
  gen_cmd->add_option("--k", gen.k, "Frames per clip");
  gen_cmd->add_option("--height", gen.height, "Frame height");
  gen_cmd->add_option("--width", gen.width, "Frame width");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();

  const auto add_data = [&](CLI::App* cmd) {
    cmd->add_option("--data", train_data, "Dataset directory or index.jsonl");
    cmd->add_option("--test-data", test_data, "Held-out dataset directory or index.jsonl");
    cmd->add_flag("--take-last", take_last, "Use the trailing K frames of longer clips");
  };

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Train a network");
  add_common(train_cmd, common);
  add_data(train_cmd);
  train_cmd->add_option("--steps", train.steps, "Step budget (overrides train.max_steps)");
  train_cmd->add_option("--resume", train.resume, "Checkpoint stem to continue from");
  train_cmd->add_option("--log-every", train.log_every, "Progress line interval in steps (0 silences)");

  EvalCommandOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  add_common(eval_cmd, common);
  add_data(eval_cmd);
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "Checkpoint stem")->required();

  PredictOptions predict;
  auto* predict_cmd = app.add_subcommand("predict", "Write the predicted mask and overlay for one clip");
  add_common(predict_cmd, common);
  predict_cmd->add_option("--checkpoint", predict.checkpoint, "Checkpoint stem")->required();
  predict_cmd->add_option("--clip", predict.clip_dir, "Clip directory")->required();
  predict_cmd->add_flag("--take-last", take_last, "Use the trailing K frames of longer clips");

  AblateOptions ablate;
  auto* ablate_cmd = app.add_subcommand("ablate", "Run an ablation suite and write its comparison table");
  add_common(ablate_cmd, common);
  add_data(ablate_cmd);
  ablate_cmd->add_option("--suite", ablate.suite, "modules, location or k-sweep")->required();
  ablate_cmd->add_option("--steps", ablate.steps, "Training steps per row");
  ablate_cmd->add_option("--preset", ablate.preset, "Synthetic preset used when no dataset is given");
  ablate_cmd->add_option("--count", ablate.count, "Synthetic training clips");
  ablate_cmd->add_option("--test-count", ablate.test_count, "Synthetic test clips");

  GradcheckOptions grad;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every differentiable op");
  add_common(grad_cmd, common);
  grad_cmd->add_option("--preset", grad.preset, "default or primitives");
  grad_cmd->add_flag("--plant-fault", grad.plant_fault, "Scale analytic gradients by 2 (must fail)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    apply_thread_cap();
    if (gen_cmd->parsed()) return cmd_gen_data(gen, std::cout);
    if (grad_cmd->parsed()) return cmd_gradcheck(common, grad, std::cout);
    RunConfig cfg = resolve(common);
    if (train_data) cfg.train_data = *train_data;
    if (test_data) cfg.test_data = *test_data;
    if (take_last) cfg.take_last_frames = true;
    if (train_cmd->parsed()) return cmd_train(cfg, train, std::cout);
    if (eval_cmd->parsed()) return cmd_eval(cfg, common, eval, std::cout);
    if (predict_cmd->parsed()) return cmd_predict(cfg, common, predict, std::cout);
    if (ablate_cmd->parsed()) return cmd_ablate(cfg, ablate, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kValidation;
}
