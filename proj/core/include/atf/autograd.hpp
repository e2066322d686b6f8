// SPDX-License-Identifier: Apache-2.0
/**
 * @file   autograd.hpp
 * @brief  Reverse-mode differentiation over Tensor values.
 *
 * A Var is a shared handle on a graph node. Operations create result nodes
 * that remember their inputs and a closure accumulating gradients into them.
 * Recording is skipped when no input requires a gradient or when a
 * NoGradGuard is alive on the current thread.
 */
#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "atf/tensor.hpp"

namespace atf {

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  Tensor value;
  Tensor grad;
  bool requires_grad = false;
  std::vector<NodePtr> parents;
  std::function<void(Node &self)> backward_fn;

  /// Gradient buffer of this node, zero-allocated on first use.
  Tensor &grad_buffer();
};

class Var {
 public:
  Var() = default;
  explicit Var(Tensor value, bool requires_grad = false);

  /// Builds the result of an operation. `fn` is only kept when recording.
  static Var from_op(Tensor value, std::vector<Var> parents,
                     std::function<void(Node &self)> fn);

  bool defined() const noexcept { return node_ != nullptr; }
  const Tensor &value() const { return node_->value; }
  Tensor &mutable_value() { return node_->value; }
  const Shape &shape() const { return node_->value.shape(); }
  std::size_t dim(std::size_t i) const { return node_->value.dim(i); }

  bool requires_grad() const { return node_ && node_->requires_grad; }
  const Tensor &grad() const { return node_->grad; }
  Tensor &grad_buffer() { return node_->grad_buffer(); }
  void zero_grad() { node_->grad = Tensor(); }

  /// Parent gradient buffer for use inside backward closures.
  static Tensor *grad_of(const NodePtr &parent) {
    return parent->requires_grad ? &parent->grad_buffer() : nullptr;
  }

  const NodePtr &node() const { return node_; }

 private:
  NodePtr node_;
};

/// Back-propagates from a scalar root (gradient seed 1). The recorded graph is
/// released afterwards; leaf gradients accumulate.
void backward(const Var &root);

class GradMode {
 public:
  static bool enabled() noexcept;
  static void set_enabled(bool on) noexcept;
};

class NoGradGuard {
 public:
  NoGradGuard() : previous_(GradMode::enabled()) {
    GradMode::set_enabled(false);
  }
  ~NoGradGuard() { GradMode::set_enabled(previous_); }
  NoGradGuard(const NoGradGuard &) = delete;
  NoGradGuard &operator=(const NoGradGuard &) = delete;

 private:
  bool previous_;
};

} // namespace atf
