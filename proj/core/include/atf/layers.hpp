// SPDX-License-Identifier: Apache-2.0
/**
 * @file   layers.hpp
 * @brief  Named parameter storage and the parameterized building blocks
 *         (convolution, normalization, BConv) shared by all modules.
 */
#pragma once

#include <string>
#include <vector>

#include "atf/autograd.hpp"
#include "atf/rng.hpp"

namespace atf {

struct NamedTensor {
  std::string name;
  Var var;
  bool trainable = true;
};

/// Owns every parameter and buffer of a model under a unique dotted name.
/// Insertion order is stable and defines serialization order.
class ParamStore {
 public:
  Var add(const std::string &name, Tensor init);
  /// Non-trainable state such as running normalization statistics.
  Var add_buffer(const std::string &name, Tensor init);

  const std::vector<NamedTensor> &entries() const { return entries_; }
  std::vector<Var> trainable() const;
  std::size_t parameter_count() const;
  const NamedTensor *find(const std::string &name) const;
  void zero_grad();

 private:
  std::vector<NamedTensor> entries_;
};

enum class NormKind { kGroup, kBatch };

struct NormSpec {
  NormKind kind = NormKind::kGroup;
  std::size_t groups = 4;

  friend bool operator==(const NormSpec &, const NormSpec &) = default;
};

struct RunContext {
  bool training = false;
};

struct ConvParams {
  Var weight;
  Var bias; // undefined when the convolution has no bias
  int stride = 1;
  int padding = 0;

  std::size_t in_channels() const { return weight.dim(1); }
  std::size_t out_channels() const { return weight.dim(0); }
};

struct NormParams {
  NormKind kind = NormKind::kGroup;
  std::size_t groups = 1;
  Var gamma, beta;
  Var running_mean, running_var; // batch mode only
};

/// 3x3 convolution (stride 1, padding 1), normalization, ReLU.
struct BConvParams {
  ConvParams conv;
  NormParams norm;
};

/// He (fan-in) initialized convolution.
ConvParams make_conv(ParamStore &store, const std::string &name,
                     std::size_t in, std::size_t out, int kernel, int stride,
                     Rng &rng, bool with_bias = true);
/// 1x1 projection.
inline ConvParams make_projection(ParamStore &store, const std::string &name,
                                  std::size_t in, std::size_t out, Rng &rng) {
  return make_conv(store, name, in, out, 1, 1, rng);
}
NormParams make_norm(ParamStore &store, const std::string &name,
                     std::size_t channels, const NormSpec &spec);
BConvParams make_bconv(ParamStore &store, const std::string &name,
                       std::size_t in, std::size_t out, const NormSpec &spec,
                       Rng &rng);

Var apply_conv(const ConvParams &p, const Var &x);
Var apply_norm(const NormParams &p, const Var &x, const RunContext &ctx);

/// BConv(x) = ReLU(Norm(Conv3x3(x))); spatial size preserved.
Var bconv(const BConvParams &p, const Var &x, const RunContext &ctx = {});

} // namespace atf
