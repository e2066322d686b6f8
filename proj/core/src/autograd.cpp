// SPDX-License-Identifier: Apache-2.0
#include "atf/autograd.hpp"

#include <unordered_set>

#include "atf/error.hpp"

namespace atf {

namespace {
thread_local bool g_grad_enabled = true;
} // namespace

bool GradMode::enabled() noexcept { return g_grad_enabled; }
void GradMode::set_enabled(bool on) noexcept { g_grad_enabled = on; }

Tensor &Node::grad_buffer() {
  if (grad.shape() != value.shape())
    grad = Tensor::zeros_like(value);
  return grad;
}

Var::Var(Tensor value, bool requires_grad)
    : node_(std::make_shared<Node>()) {
  node_->value = std::move(value);
  node_->requires_grad = requires_grad;
}

Var Var::from_op(Tensor value, std::vector<Var> parents,
                 std::function<void(Node &self)> fn) {
  Var out(std::move(value), false);
  if (!GradMode::enabled())
    return out;
  bool any = false;
  for (const auto &p : parents)
    any = any || p.requires_grad();
  if (!any)
    return out;
  out.node_->requires_grad = true;
  out.node_->parents.reserve(parents.size());
  for (auto &p : parents)
    out.node_->parents.push_back(p.node_);
  out.node_->backward_fn = std::move(fn);
  return out;
}

void backward(const Var &root) {
  if (!root.defined() || !root.requires_grad())
    fail(ErrorKind::kNumeric, "backward on a value without gradient");
  if (root.value().size() != 1)
    fail(ErrorKind::kShape,
         "backward root must be scalar, got " + shape_str(root.shape()));

  // Iterative post-order DFS gives a topological order. The order owns its
  // nodes: releasing a node's parents below must not free pending ones.
  std::vector<NodePtr> order;
  std::unordered_set<Node *> seen;
  std::vector<std::pair<NodePtr, std::size_t>> stack;
  stack.emplace_back(root.node(), 0);
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto &[node, next] = stack.back();
    if (next < node->parents.size()) {
      const NodePtr &parent = node->parents[next++];
      if (parent->requires_grad && seen.insert(parent.get()).second)
        stack.emplace_back(parent, 0);
    } else {
      order.push_back(std::move(node));
      stack.pop_back();
    }
  }

  root.node()->grad_buffer()[0] += 1;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node *node = it->get();
    if (node->backward_fn && !node->grad.empty())
      node->backward_fn(*node);
    if (!node->parents.empty()) {
      node->backward_fn = nullptr;
      node->parents.clear();
      node->grad = Tensor();
    }
  }
}

} // namespace atf
