// SPDX-License-Identifier: Apache-2.0
/**
 * @file   mda.hpp
 * @brief  Decoder-level aggregation with relevance-embedding attention.
 *
 * Attention block on R, P, Q (c x h x w each), positions m, n in [0, hw):
 *   S_p(m, n) = cos(R(:, m), P(:, n))
 *   U_p(m)    = argmax_n S_p(m, n)   (lowest index on ties)
 *   V_p(m)    = max_n S_p(m, n)
 *   T_p(:, m) = P(:, U_p(m))
 *   Z_p       = Conv1x1(Concat(R, T_p)) * V_p
 *   D         = BConv(Concat(R, Z_p, Z_q))
 *
 * MDA step j with inputs K_r, K_f, K_d and the previous aggregate Phi:
 *   D1 = attn(K_r; K_f, K_d), D2 = attn(K_r; K_f, Up(Phi)),
 *   D3 = attn(K_r; K_d, Up(Phi))
 *   Phi_j = Up(Phi) + MaxPool3x3(Conv1x1(channel-softmax(Concat(D1, D2, D3))))
 *
 * No gradient flows through U; V and the gathered values are differentiable.
 */
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "atf/layers.hpp"

namespace atf {

/// Per-position best match of R against P, batched.
struct MatchResult {
  std::vector<std::uint32_t> index; ///< U, N * hw entries
  Var value;                        ///< V, N x 1 x h x w
};

/// Cosine similarity matrix of the columns of two c x hw matrices, with
/// 1e-8 added to each norm.
Tensor relevance_embedding(const Tensor &r_bar, const Tensor &p_bar);

/// U and V for every batch item of N x c x h x w inputs. The full similarity
/// matrix is never stored.
MatchResult relevance_match(const Var &r, const Var &p);

/// T(:, m) = P(:, index(m)) for every batch item.
Var gather_positions(const Var &p, const std::vector<std::uint32_t> &index);

struct AttentionBlockParams {
  bool with_attention = true;
  std::size_t channels = 0;
  ConvParams z_p, z_q; ///< 2c -> c, unused without attention
  BConvParams out;     ///< 3c -> c
};

/// Batch item 0 only, except where noted.
struct AttentionIntermediates {
  Tensor s_p, s_q; ///< hw x hw
  std::vector<std::uint32_t> u_p, u_q;
  std::vector<real> v_p, v_q;
  Tensor t_p, t_q; ///< c x hw
  Tensor z_p, z_q; ///< N x c x h x w
  Tensor d;        ///< N x c x h x w
};

AttentionBlockParams build_attention_block(ParamStore &store,
                                           const std::string &prefix,
                                           std::size_t channels,
                                           bool with_attention,
                                           const NormSpec &norm, Rng &rng);

Var attention_block(const AttentionBlockParams &params, const Var &r,
                    const Var &p, const Var &q, const RunContext &ctx = {},
                    AttentionIntermediates *inspect = nullptr);

/// Same, reusing matches of R against P and Q computed by the caller.
Var attention_block(const AttentionBlockParams &params, const Var &r,
                    const Var &p, const Var &q, const MatchResult &match_p,
                    const MatchResult &match_q, const RunContext &ctx = {});

struct MdaParams {
  std::size_t step = 1; ///< j = 1..4
  std::size_t channels = 0;
  std::array<ConvParams, 3> project; ///< K_r, K_f, K_d -> c_fuse
  std::array<AttentionBlockParams, 3> blocks;
  ConvParams mix; ///< 3 c_fuse -> c_fuse
};

MdaParams build_mda(ParamStore &store, const std::string &prefix,
                    std::size_t step, std::size_t in_channels,
                    std::size_t c_fuse, bool with_attention,
                    const NormSpec &norm, Rng &rng);

/// K_* are N x in_channels x h x w; `phi_prev` is N x c_fuse x h/2 x w/2.
/// Returns Phi_j, N x c_fuse x h x w.
Var mda_forward(const MdaParams &params, const Var &k_rgb, const Var &k_flow,
                const Var &k_depth, const Var &phi_prev,
                const RunContext &ctx = {});

} // namespace atf
