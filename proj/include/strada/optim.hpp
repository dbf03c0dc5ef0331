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
#include <string>
#include <string_view>
#include <vector>

#include "strada/error.hpp"
#include "strada/tensor.hpp"

namespace strada {

enum class OptimizerKind { kSgd, kAdam, kRAdam };

inline std::string to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kSgd:
      return "sgd";
    case OptimizerKind::kAdam:
      return "adam";
    case OptimizerKind::kRAdam:
      return "radam";
  }
  return "radam";
}

inline OptimizerKind parse_optimizer_kind(std::string_view name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "radam") return OptimizerKind::kRAdam;
  throw ConfigError("unknown optimizer '" + std::string(name) + "'");
}

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kRAdam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double momentum = 0.0;  // SGD only
  double weight_decay = 0.0;

  void validate() const {
    if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1) {
      throw ConfigError("optimizer: betas must lie in [0, 1)");
    }
    if (eps <= 0) throw ConfigError("optimizer: eps must be positive");
    if (momentum < 0 || momentum >= 1) throw ConfigError("optimizer: momentum must lie in [0, 1)");
    if (weight_decay < 0) throw ConfigError("optimizer: weight decay must be non-negative");
  }
};

// Length of the approximated simple moving average for RAdam at step t.
inline double radam_rho(double beta2, std::size_t t) {
  const double rho_inf = 2.0 / (1.0 - beta2) - 1.0;
  const double b2t = std::pow(beta2, static_cast<double>(t));
  return rho_inf - 2.0 * static_cast<double>(t) * b2t / (1.0 - b2t);
}

// Whether RAdam takes the variance-rectified branch at step t.
inline bool radam_rectified(double beta2, std::size_t t) { return radam_rho(beta2, t) > 4.0; }

// SGD (optionally with heavy-ball momentum), Adam, and RAdam over a fixed
// parameter list. Moments live in double regardless of parameter precision.
template <typename T>
class Optimizer {
 public:
  Optimizer(std::vector<Tensor<T>> params, OptimizerConfig config)
      : params_(std::move(params)), config_(config) {
    config_.validate();
    for (const auto& p : params_) {
      first_.emplace_back(p.numel(), 0.0);
      second_.emplace_back(config_.kind == OptimizerKind::kSgd ? 0 : p.numel(), 0.0);
    }
  }

  const OptimizerConfig& config() const { return config_; }
  std::size_t step_count() const { return step_; }
  const std::vector<Tensor<T>>& params() const { return params_; }

  // First moment (or SGD momentum buffer) and second moment of parameter i.
  const std::vector<double>& first_moment(std::size_t i) const { return first_[i]; }
  const std::vector<double>& second_moment(std::size_t i) const { return second_[i]; }
  std::vector<double>& first_moment(std::size_t i) { return first_[i]; }
  std::vector<double>& second_moment(std::size_t i) { return second_[i]; }
  void set_step_count(std::size_t t) { step_ = t; }

  // Applies one update with learning rate `lr`. Parameters that never
  // received a gradient are treated as having a zero gradient.
  void step(double lr) {
    const bool any = std::any_of(params_.begin(), params_.end(), [](const Tensor<T>& p) { return p.has_grad(); });
    if (!any) throw ConfigError("optimizer: step with no gradients populated");
    ++step_;
    const double t = static_cast<double>(step_);
    const double b1 = config_.beta1, b2 = config_.beta2;
    const double bias1 = 1.0 - std::pow(b1, t);
    const double bias2 = 1.0 - std::pow(b2, t);
    const double rho_inf = 2.0 / (1.0 - b2) - 1.0;
    const double rho = radam_rho(b2, step_);
    const bool rectify = rho > 4.0;
    const double rect = rectify ? std::sqrt((rho - 4.0) * (rho - 2.0) * rho_inf /
                                            ((rho_inf - 4.0) * (rho_inf - 2.0) * rho))
                                : 0.0;

    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& p = params_[i];
      auto values = p.data();
      const auto grad = p.grad();
      auto& m = first_[i];
      auto& v = second_[i];
      for (std::size_t j = 0; j < values.size(); ++j) {
        double g = p.has_grad() ? static_cast<double>(grad[j]) : 0.0;
        const double theta = static_cast<double>(values[j]);
        if (config_.weight_decay > 0) g += config_.weight_decay * theta;
        double update = 0.0;
        switch (config_.kind) {
          case OptimizerKind::kSgd:
            if (config_.momentum > 0) {
              m[j] = config_.momentum * m[j] + g;
              update = lr * m[j];
            } else {
              update = lr * g;
            }
            break;
          case OptimizerKind::kAdam: {
            m[j] = b1 * m[j] + (1.0 - b1) * g;
            v[j] = b2 * v[j] + (1.0 - b2) * g * g;
            const double m_hat = m[j] / bias1;
            const double v_hat = v[j] / bias2;
            update = lr * m_hat / (std::sqrt(v_hat) + config_.eps);
            break;
          }
          case OptimizerKind::kRAdam: {
            m[j] = b1 * m[j] + (1.0 - b1) * g;
            v[j] = b2 * v[j] + (1.0 - b2) * g * g;
            const double m_hat = m[j] / bias1;
            if (rectify) {
              const double v_hat = std::sqrt(v[j] / bias2);
              update = lr * rect * m_hat / (v_hat + config_.eps);
            } else {
              update = lr * m_hat;
            }
            break;
          }
        }
        values[j] = static_cast<T>(theta - update);
      }
    }
  }

 private:
  std::vector<Tensor<T>> params_;
  OptimizerConfig config_;
  std::vector<std::vector<double>> first_, second_;
  std::size_t step_ = 0;
};

}  // namespace strada
