// SPDX-License-Identifier: Apache-2.0
#include "atf/layers.hpp"

#include <cmath>
#include <numeric>

#include "atf/error.hpp"
#include "atf/ops.hpp"

namespace atf {

Var ParamStore::add(const std::string &name, Tensor init) {
  if (find(name))
    fail(ErrorKind::kConfig, "duplicate parameter name " + name);
  Var v(std::move(init), true);
  entries_.push_back({name, v, true});
  return v;
}

Var ParamStore::add_buffer(const std::string &name, Tensor init) {
  if (find(name))
    fail(ErrorKind::kConfig, "duplicate buffer name " + name);
  Var v(std::move(init), false);
  entries_.push_back({name, v, false});
  return v;
}

std::vector<Var> ParamStore::trainable() const {
  std::vector<Var> out;
  for (const auto &e : entries_)
    if (e.trainable)
      out.push_back(e.var);
  return out;
}

std::size_t ParamStore::parameter_count() const {
  std::size_t total = 0;
  for (const auto &e : entries_)
    if (e.trainable)
      total += e.var.value().size();
  return total;
}

const NamedTensor *ParamStore::find(const std::string &name) const {
  for (const auto &e : entries_)
    if (e.name == name)
      return &e;
  return nullptr;
}

void ParamStore::zero_grad() {
  for (auto &e : entries_)
    if (e.trainable)
      e.var.zero_grad();
}

ConvParams make_conv(ParamStore &store, const std::string &name,
                     std::size_t in, std::size_t out, int kernel, int stride,
                     Rng &rng, bool with_bias) {
  if (in == 0 || out == 0)
    fail(ErrorKind::kConfig, name + ": zero channel convolution");
  const auto k = static_cast<std::size_t>(kernel);
  Tensor w({out, in, k, k});
  const double std_dev = std::sqrt(2.0 / static_cast<double>(in * k * k));
  for (auto &v : w.data())
    v = std_dev * rng.normal();
  ConvParams p;
  p.weight = store.add(name + ".weight", std::move(w));
  if (with_bias)
    p.bias = store.add(name + ".bias", Tensor({out}));
  p.stride = stride;
  p.padding = kernel / 2;
  return p;
}

NormParams make_norm(ParamStore &store, const std::string &name,
                     std::size_t channels, const NormSpec &spec) {
  NormParams p;
  p.kind = spec.kind;
  p.groups = std::gcd(channels, std::max<std::size_t>(spec.groups, 1));
  p.gamma = store.add(name + ".gamma", Tensor({channels}, 1.0));
  p.beta = store.add(name + ".beta", Tensor({channels}));
  if (spec.kind == NormKind::kBatch) {
    p.running_mean = store.add_buffer(name + ".running_mean", Tensor({channels}));
    p.running_var =
        store.add_buffer(name + ".running_var", Tensor({channels}, 1.0));
  }
  return p;
}

BConvParams make_bconv(ParamStore &store, const std::string &name,
                       std::size_t in, std::size_t out, const NormSpec &spec,
                       Rng &rng) {
  BConvParams p;
  p.conv = make_conv(store, name + ".conv", in, out, 3, 1, rng);
  p.norm = make_norm(store, name + ".norm", out, spec);
  return p;
}

Var apply_conv(const ConvParams &p, const Var &x) {
  return nn::conv2d(x, p.weight, p.bias, p.stride, p.padding);
}

Var apply_norm(const NormParams &p, const Var &x, const RunContext &ctx) {
  if (p.kind == NormKind::kBatch) {
    // Running statistics are buffers owned by the store: mutated in place.
    auto &rm = const_cast<Var &>(p.running_mean).mutable_value();
    auto &rv = const_cast<Var &>(p.running_var).mutable_value();
    return nn::batch_norm(x, p.gamma, p.beta, rm, rv, ctx.training);
  }
  return nn::group_norm(x, p.gamma, p.beta, p.groups);
}

Var bconv(const BConvParams &p, const Var &x, const RunContext &ctx) {
  if (!x.defined() || x.value().rank() != 4 ||
      x.dim(1) != p.conv.in_channels())
    fail(ErrorKind::kShape,
         "bconv expects " + std::to_string(p.conv.in_channels()) +
             " input channels, got " + (x.defined() ? shape_str(x.shape()) : "none"));
  return nn::relu(apply_norm(p.norm, apply_conv(p.conv, x), ctx));
}

} // namespace atf
