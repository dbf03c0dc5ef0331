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
#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "strada/error.hpp"

namespace strada {

// Extents of a rank-4 (batch, channel, height, width) array.
struct Shape {
  std::array<std::size_t, 4> dims{0, 0, 0, 0};

  constexpr Shape() = default;
  constexpr Shape(std::size_t b, std::size_t c, std::size_t h, std::size_t w) : dims{b, c, h, w} {}

  constexpr std::size_t n() const { return dims[0]; }
  constexpr std::size_t c() const { return dims[1]; }
  constexpr std::size_t h() const { return dims[2]; }
  constexpr std::size_t w() const { return dims[3]; }
  constexpr std::size_t plane() const { return dims[2] * dims[3]; }
  constexpr std::size_t numel() const { return dims[0] * dims[1] * dims[2] * dims[3]; }

  constexpr bool operator==(const Shape&) const = default;

  std::string str() const {
    return "(" + std::to_string(dims[0]) + "," + std::to_string(dims[1]) + "," +
           std::to_string(dims[2]) + "," + std::to_string(dims[3]) + ")";
  }
};

template <typename T>
struct TensorNode;

template <typename T>
using NodePtr = std::shared_ptr<TensorNode<T>>;

// One recorded value in the differentiation graph. Interior nodes carry the
// closure that pushes their grad into `inputs`; leaves have no closure.
template <typename T>
struct TensorNode {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;
  bool requires_grad = false;
  std::string_view op = "leaf";
  std::vector<NodePtr<T>> inputs;
  std::function<void(TensorNode&)> backward_fn;

  bool is_leaf() const { return !backward_fn; }

  std::vector<T>& ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), T(0));
    return grad;
  }
};

namespace detail {
inline bool& grad_mode_flag() {
  thread_local bool enabled = true;
  return enabled;
}
}  // namespace detail

inline bool grad_enabled() { return detail::grad_mode_flag(); }

// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(detail::grad_mode_flag()) { detail::grad_mode_flag() = false; }
  ~NoGradGuard() { detail::grad_mode_flag() = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Dense rank-4 array that may take part in reverse-mode differentiation.
//
// A Tensor is a shared handle: copies alias the same storage and graph node.
// Use clone() for an independent value and detach() to cut it from the graph.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape, T fill = T(0)) : node_(std::make_shared<TensorNode<T>>()) {
    node_->shape = shape;
    node_->data.assign(shape.numel(), fill);
  }

  Tensor(Shape shape, std::vector<T> values) : node_(std::make_shared<TensorNode<T>>()) {
    if (values.size() != shape.numel()) {
      throw ShapeError("tensor: " + std::to_string(values.size()) + " values for shape " +
                       shape.str());
    }
    node_->shape = shape;
    node_->data = std::move(values);
  }

  static Tensor zeros(Shape shape) { return Tensor(shape, T(0)); }
  static Tensor full(Shape shape, T value) { return Tensor(shape, value); }
  static Tensor scalar(T value) { return Tensor(Shape{1, 1, 1, 1}, value); }

  static Tensor from_node(NodePtr<T> node) {
    Tensor t;
    t.node_ = std::move(node);
    return t;
  }

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node_->shape; }
  std::size_t numel() const { return node_->data.size(); }

  std::span<T> data() { return node_->data; }
  std::span<const T> data() const { return node_->data; }
  std::vector<T>& values() { return node_->data; }
  const std::vector<T>& values() const { return node_->data; }

  // Empty until a backward pass reaches this tensor.
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return node_->ensure_grad(); }
  bool has_grad() const { return node_->grad.size() == node_->data.size(); }
  void zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), T(0)); }

  bool requires_grad() const { return node_->requires_grad; }
  Tensor& set_requires_grad(bool on = true) {
    node_->requires_grad = on;
    return *this;
  }
  bool is_leaf() const { return node_->is_leaf(); }

  T item() const {
    if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape().str());
    return node_->data[0];
  }

  T& at(std::size_t b, std::size_t c, std::size_t y, std::size_t x) {
    return node_->data[index(b, c, y, x)];
  }
  T at(std::size_t b, std::size_t c, std::size_t y, std::size_t x) const {
    return node_->data[index(b, c, y, x)];
  }

  Tensor clone() const {
    Tensor t(shape(), node_->data);
    t.node_->requires_grad = node_->requires_grad;
    return t;
  }
  Tensor detach() const { return Tensor(shape(), node_->data); }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(node_->data.begin(), node_->data.end());
    return Tensor<U>(shape(), std::move(out));
  }

  const NodePtr<T>& node() const { return node_; }

 private:
  std::size_t index(std::size_t b, std::size_t c, std::size_t y, std::size_t x) const {
    const auto& d = node_->shape.dims;
    assert(b < d[0] && c < d[1] && y < d[2] && x < d[3]);
    return ((b * d[1] + c) * d[2] + y) * d[3] + x;
  }

  NodePtr<T> node_;
};

namespace detail {

template <typename T>
void require_finite(const std::vector<T>& values, std::string_view op) {
  for (const T v : values) {
    if (!std::isfinite(v)) throw NumericError(std::string(op) + ": non-finite value");
  }
}

}  // namespace detail

// Wraps freshly computed values as an op result. The backward closure is kept
// only when recording is on and some input requires a gradient.
template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> values, std::string_view op,
                      std::vector<Tensor<T>> inputs,
                      std::function<void(TensorNode<T>&)> backward_fn) {
  detail::require_finite(values, op);
  auto node = std::make_shared<TensorNode<T>>();
  node->shape = shape;
  node->data = std::move(values);
  node->op = op;
  const bool track =
      grad_enabled() && std::any_of(inputs.begin(), inputs.end(), [](const Tensor<T>& t) {
        return t.defined() && t.requires_grad();
      });
  if (track) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (auto& t : inputs) node->inputs.push_back(t.defined() ? t.node() : nullptr);
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor<T>::from_node(std::move(node));
}

// Input `i` of a node, or nullptr when it needs no gradient.
template <typename T>
TensorNode<T>* grad_target(TensorNode<T>& self, std::size_t i) {
  auto& p = self.inputs[i];
  return (p && p->requires_grad) ? p.get() : nullptr;
}

// Reverse-mode sweep from a scalar. Leaf grads accumulate across calls;
// interior grads are reset first so a repeated call adds exactly one more
// copy of d(loss)/d(leaf).
template <typename T>
void backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ShapeError("backward: loss must be a scalar tensor");
  }
  TensorNode<T>* root = loss.node().get();
  if (!root->requires_grad) return;

  std::vector<TensorNode<T>*> order;
  std::unordered_set<TensorNode<T>*> visited;
  std::vector<std::pair<TensorNode<T>*, std::size_t>> stack{{root, 0}};
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      TensorNode<T>* child = node->inputs[next++].get();
      if (child && child->requires_grad && visited.insert(child).second) {
        stack.emplace_back(child, 0);
      }
      continue;
    }
    order.push_back(node);
    stack.pop_back();
  }
  assert(order.back() == root);

  for (TensorNode<T>* node : order) {
    if (!node->is_leaf()) node->grad.assign(node->data.size(), T(0));
  }
  root->ensure_grad()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (!(*it)->is_leaf()) (*it)->backward_fn(**it);
  }
}

}  // namespace strada
