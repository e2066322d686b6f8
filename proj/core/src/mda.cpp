// SPDX-License-Identifier: Apache-2.0
#include "atf/mda.hpp"

#include <algorithm>
#include <cstring>
#include <type_traits>
#include <cmath>

#include "atf/error.hpp"
#include "atf/ops.hpp"
#include "blas.hpp"

namespace atf {

namespace {

constexpr real kNormEps = 1e-8;

// Above this many positions the argmax search runs in single precision; the
// selected similarity is then recomputed in double.
constexpr std::size_t kExactSearchLimit = 4096;

std::size_t block_rows(std::size_t positions) {
  return std::clamp<std::size_t>((std::size_t{1} << 21) / positions, 1,
                                 positions);
}

// Columns of a c x hw matrix scaled by 1 / (|col| + eps), written transposed
// (hw x c) when `transposed` is set.
std::vector<real> normalized_columns(const real *m, std::size_t c,
                                     std::size_t hw, bool transposed) {
  std::vector<real> inv(hw, 0);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t j = 0; j < hw; ++j)
      inv[j] += m[ch * hw + j] * m[ch * hw + j];
  for (auto &v : inv)
    v = 1 / (std::sqrt(v) + kNormEps);
  std::vector<real> out(c * hw);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t j = 0; j < hw; ++j) {
      const real v = m[ch * hw + j] * inv[j];
      if (transposed)
        out[j * c + ch] = v;
      else
        out[ch * hw + j] = v;
    }
  return out;
}

// First maximum of each row. Independent lanes of 64 bytes keep the scan
// vectorized; each lane keeps its own first maximum, and the lowest index
// wins among lanes that tie.
template <typename T>
void row_argmax(const T *block, std::size_t rows, std::size_t cols,
                std::uint32_t *out) {
  using Index = std::conditional_t<sizeof(T) == 4, std::int32_t, std::int64_t>;
  constexpr std::size_t kLanes = 64 / sizeof(T);
  typedef T Values __attribute__((vector_size(64)));
  typedef Index Indices __attribute__((vector_size(64)));
  Indices step = {}, start = {};
  for (std::size_t j = 0; j < kLanes; ++j) {
    step[j] = static_cast<Index>(kLanes);
    start[j] = static_cast<Index>(j);
  }
  for (std::size_t r = 0; r < rows; ++r) {
    const T *row = block + r * cols;
    std::size_t best = 0;
    std::size_t c = 0;
    if (cols >= kLanes) {
      Values lane_max;
      std::memcpy(&lane_max, row, sizeof lane_max);
      Indices lane_idx = start, idx = start;
      for (c = kLanes; c + kLanes <= cols; c += kLanes) {
        Values v;
        std::memcpy(&v, row + c, sizeof v);
        idx += step;
        const Indices gt = v > lane_max;
        lane_max = gt ? v : lane_max;
        lane_idx = gt ? idx : lane_idx;
      }
      best = static_cast<std::size_t>(lane_idx[0]);
      for (std::size_t j = 1; j < kLanes; ++j) {
        const auto cand = static_cast<std::size_t>(lane_idx[j]);
        if (lane_max[j] > row[best] || (lane_max[j] == row[best] && cand < best))
          best = cand;
      }
    }
    for (; c < cols; ++c)
      if (row[c] > row[best])
        best = c;
    out[r] = static_cast<std::uint32_t>(best);
  }
}

void search(const real *r, const real *p, std::size_t c, std::size_t hw,
            std::uint32_t *out) {
  const std::vector<real> rt = normalized_columns(r, c, hw, true);
  const std::vector<real> pn = normalized_columns(p, c, hw, false);
  const std::size_t bm_max = block_rows(hw);
  if (hw <= kExactSearchLimit) {
    std::vector<real> block(bm_max * hw);
    for (std::size_t m0 = 0; m0 < hw; m0 += bm_max) {
      const std::size_t bm = std::min(bm_max, hw - m0);
      detail::gemm(false, false, bm, hw, c, 1, rt.data() + m0 * c, pn.data(), 0,
                   block.data());
      row_argmax(block.data(), bm, hw, out + m0);
    }
    return;
  }
  std::vector<float> rtf(rt.begin(), rt.end()), pnf(pn.begin(), pn.end());
  std::vector<float> block(bm_max * hw);
  for (std::size_t m0 = 0; m0 < hw; m0 += bm_max) {
    const std::size_t bm = std::min(bm_max, hw - m0);
    detail::sgemm(false, false, bm, hw, c, 1, rtf.data() + m0 * c, pnf.data(),
                  0, block.data());
    row_argmax(block.data(), bm, hw, out + m0);
  }
}

void check_same(const Var &a, const Var &b, const char *what) {
  if (!a.defined() || !b.defined() || a.value().rank() != 4 ||
      a.shape() != b.shape())
    fail(ErrorKind::kShape, std::string(what) + " needs equal N x c x h x w inputs");
}

Var soft_attention(const Var &r, const Var &p,
                   const std::vector<std::uint32_t> &index) {
  const std::size_t n = r.dim(0), c = r.dim(1), hw = r.dim(2) * r.dim(3);
  Tensor v({n, 1, r.dim(2), r.dim(3)});
  for (std::size_t b = 0; b < n; ++b) {
    const real *rb = r.value().ptr() + b * c * hw;
    const real *pb = p.value().ptr() + b * c * hw;
    for (std::size_t m = 0; m < hw; ++m) {
      const std::size_t j = index[b * hw + m];
      real dot = 0, na = 0, nb = 0;
      for (std::size_t ch = 0; ch < c; ++ch) {
        const real x = rb[ch * hw + m], y = pb[ch * hw + j];
        dot += x * y;
        na += x * x;
        nb += y * y;
      }
      v[b * hw + m] = dot / ((std::sqrt(na) + kNormEps) * (std::sqrt(nb) + kNormEps));
    }
  }
  return Var::from_op(std::move(v), {r, p}, [=](Node &self) {
    Tensor *gr = Var::grad_of(self.parents[0]);
    Tensor *gp = Var::grad_of(self.parents[1]);
    const Tensor &rv = self.parents[0]->value;
    const Tensor &pv = self.parents[1]->value;
    for (std::size_t b = 0; b < n; ++b) {
      const real *rb = rv.ptr() + b * c * hw;
      const real *pb = pv.ptr() + b * c * hw;
      for (std::size_t m = 0; m < hw; ++m) {
        const real g = self.grad[b * hw + m];
        if (g == 0)
          continue;
        const std::size_t j = index[b * hw + m];
        real na = 0, nb = 0;
        for (std::size_t ch = 0; ch < c; ++ch) {
          na += rb[ch * hw + m] * rb[ch * hw + m];
          nb += pb[ch * hw + j] * pb[ch * hw + j];
        }
        na = std::sqrt(na);
        nb = std::sqrt(nb);
        const real q = 1 / ((na + kNormEps) * (nb + kNormEps));
        const real val = self.value[b * hw + m];
        const real ka = na > 0 ? val / (na * (na + kNormEps)) : 0;
        const real kb = nb > 0 ? val / (nb * (nb + kNormEps)) : 0;
        for (std::size_t ch = 0; ch < c; ++ch) {
          const real x = rb[ch * hw + m], y = pb[ch * hw + j];
          if (gr)
            (*gr)[b * c * hw + ch * hw + m] += g * (y * q - ka * x);
          if (gp)
            (*gp)[b * c * hw + ch * hw + j] += g * (x * q - kb * y);
        }
      }
    }
  });
}

Var block_impl(const AttentionBlockParams &params, const Var &r, const Var &p,
               const Var &q, const MatchResult *match_p,
               const MatchResult *match_q, const RunContext &ctx,
               AttentionIntermediates *inspect) {
  check_same(r, p, "attention_block");
  check_same(r, q, "attention_block");
  if (r.dim(1) != params.channels)
    fail(ErrorKind::kShape, "attention block expects " +
                                std::to_string(params.channels) + " channels, got " +
                                shape_str(r.shape()));
  if (!params.with_attention) {
    Var d = bconv(params.out, nn::concat_channels({r, p, q}), ctx);
    if (inspect)
      inspect->d = d.value();
    return d;
  }
  const Var tp = gather_positions(p, match_p->index);
  const Var tq = gather_positions(q, match_q->index);
  const Var zp = nn::mul_position_gate(
      apply_conv(params.z_p, nn::concat_channels({r, tp})), match_p->value);
  const Var zq = nn::mul_position_gate(
      apply_conv(params.z_q, nn::concat_channels({r, tq})), match_q->value);
  Var d = bconv(params.out, nn::concat_channels({r, zp, zq}), ctx);
  if (inspect) {
    const std::size_t c = r.dim(1), hw = r.dim(2) * r.dim(3);
    const Tensor r0 = batch_item(r.value(), 0).reshaped({c, hw});
    inspect->s_p = relevance_embedding(r0, batch_item(p.value(), 0).reshaped({c, hw}));
    inspect->s_q = relevance_embedding(r0, batch_item(q.value(), 0).reshaped({c, hw}));
    inspect->u_p.assign(match_p->index.begin(), match_p->index.begin() + hw);
    inspect->u_q.assign(match_q->index.begin(), match_q->index.begin() + hw);
    const auto vp = match_p->value.value().data(), vq = match_q->value.value().data();
    inspect->v_p.assign(vp.begin(), vp.begin() + hw);
    inspect->v_q.assign(vq.begin(), vq.begin() + hw);
    inspect->t_p = batch_item(tp.value(), 0).reshaped({c, hw});
    inspect->t_q = batch_item(tq.value(), 0).reshaped({c, hw});
    inspect->z_p = zp.value();
    inspect->z_q = zq.value();
    inspect->d = d.value();
  }
  return d;
}

} // namespace

Tensor relevance_embedding(const Tensor &r_bar, const Tensor &p_bar) {
  if (r_bar.rank() != 2 || r_bar.shape() != p_bar.shape())
    fail(ErrorKind::kShape, "relevance_embedding needs two c x hw matrices, got " +
                                shape_str(r_bar.shape()) + " and " +
                                shape_str(p_bar.shape()));
  const std::size_t c = r_bar.dim(0), hw = r_bar.dim(1);
  const std::vector<real> rt = normalized_columns(r_bar.ptr(), c, hw, true);
  const std::vector<real> pn = normalized_columns(p_bar.ptr(), c, hw, false);
  Tensor s({hw, hw});
  detail::gemm(false, false, hw, hw, c, 1, rt.data(), pn.data(), 0, s.ptr());
  return s;
}

MatchResult relevance_match(const Var &r, const Var &p) {
  check_same(r, p, "relevance_match");
  const std::size_t n = r.dim(0), c = r.dim(1), hw = r.dim(2) * r.dim(3);
  MatchResult out;
  out.index.resize(n * hw);
  for (std::size_t b = 0; b < n; ++b)
    search(r.value().ptr() + b * c * hw, p.value().ptr() + b * c * hw, c, hw,
           out.index.data() + b * hw);
  out.value = soft_attention(r, p, out.index);
  return out;
}

Var gather_positions(const Var &p, const std::vector<std::uint32_t> &index) {
  if (!p.defined() || p.value().rank() != 4)
    fail(ErrorKind::kShape, "gather_positions expects N x c x h x w");
  const std::size_t n = p.dim(0), c = p.dim(1), hw = p.dim(2) * p.dim(3);
  if (index.size() != n * hw)
    fail(ErrorKind::kShape, "gather index has " + std::to_string(index.size()) +
                                " entries, expected " + std::to_string(n * hw));
  for (const auto j : index)
    if (j >= hw)
      fail(ErrorKind::kShape, "gather index out of range");
  Tensor out(p.shape());
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const real *src = p.value().ptr() + (b * c + ch) * hw;
      real *dst = out.ptr() + (b * c + ch) * hw;
      for (std::size_t m = 0; m < hw; ++m)
        dst[m] = src[index[b * hw + m]];
    }
  return Var::from_op(std::move(out), {p}, [=](Node &self) {
    Tensor *g = Var::grad_of(self.parents[0]);
    if (!g)
      return;
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t ch = 0; ch < c; ++ch) {
        const real *src = self.grad.ptr() + (b * c + ch) * hw;
        real *dst = g->ptr() + (b * c + ch) * hw;
        for (std::size_t m = 0; m < hw; ++m)
          dst[index[b * hw + m]] += src[m];
      }
  });
}

AttentionBlockParams build_attention_block(ParamStore &store,
                                           const std::string &prefix,
                                           std::size_t channels,
                                           bool with_attention,
                                           const NormSpec &norm, Rng &rng) {
  AttentionBlockParams p;
  p.with_attention = with_attention;
  p.channels = channels;
  if (with_attention) {
    p.z_p = make_projection(store, prefix + ".z_p", 2 * channels, channels, rng);
    p.z_q = make_projection(store, prefix + ".z_q", 2 * channels, channels, rng);
  }
  p.out = make_bconv(store, prefix + ".out", 3 * channels, channels, norm, rng);
  return p;
}

Var attention_block(const AttentionBlockParams &params, const Var &r,
                    const Var &p, const Var &q, const RunContext &ctx,
                    AttentionIntermediates *inspect) {
  if (!params.with_attention)
    return block_impl(params, r, p, q, nullptr, nullptr, ctx, inspect);
  check_same(r, p, "attention_block");
  check_same(r, q, "attention_block");
  const MatchResult mp = relevance_match(r, p);
  const MatchResult mq = relevance_match(r, q);
  return block_impl(params, r, p, q, &mp, &mq, ctx, inspect);
}

Var attention_block(const AttentionBlockParams &params, const Var &r,
                    const Var &p, const Var &q, const MatchResult &match_p,
                    const MatchResult &match_q, const RunContext &ctx) {
  return block_impl(params, r, p, q, &match_p, &match_q, ctx, nullptr);
}

MdaParams build_mda(ParamStore &store, const std::string &prefix,
                    std::size_t step, std::size_t in_channels,
                    std::size_t c_fuse, bool with_attention,
                    const NormSpec &norm, Rng &rng) {
  if (step < 1 || step > 4)
    fail(ErrorKind::kConfig, prefix + ": MDA step must be in 1..4");
  MdaParams p;
  p.step = step;
  p.channels = c_fuse;
  const char *names[3] = {"rgb", "flow", "depth"};
  for (std::size_t i = 0; i < 3; ++i)
    p.project[i] = make_projection(store, prefix + ".project_" + names[i],
                                   in_channels, c_fuse, rng);
  for (std::size_t i = 0; i < 3; ++i)
    p.blocks[i] = build_attention_block(store, prefix + ".block" + std::to_string(i + 1),
                                        c_fuse, with_attention, norm, rng);
  p.mix = make_projection(store, prefix + ".mix", 3 * c_fuse, c_fuse, rng);
  // Softmax inputs have magnitude 1/(3c) rather than 1; rescale so the
  // residual starts on the same scale as the upsampled aggregate.
  for (auto &v : p.mix.weight.mutable_value().data())
    v *= static_cast<real>(3 * c_fuse);
  return p;
}

Var mda_forward(const MdaParams &params, const Var &k_rgb, const Var &k_flow,
                const Var &k_depth, const Var &phi_prev, const RunContext &ctx) {
  check_same(k_rgb, k_flow, "mda_forward");
  check_same(k_rgb, k_depth, "mda_forward");
  const std::size_t in = params.project[0].in_channels();
  if (k_rgb.dim(1) != in)
    fail(ErrorKind::kShape, "MDA_" + std::to_string(params.step) + " expects " +
                                std::to_string(in) + "-channel decoder features, got " +
                                shape_str(k_rgb.shape()));
  const std::size_t h = k_rgb.dim(2), w = k_rgb.dim(3);
  if (!phi_prev.defined() || phi_prev.value().rank() != 4 ||
      phi_prev.dim(0) != k_rgb.dim(0) || phi_prev.dim(1) != params.channels ||
      2 * phi_prev.dim(2) != h || 2 * phi_prev.dim(3) != w)
    fail(ErrorKind::kShape, "previous aggregate " +
                                (phi_prev.defined() ? shape_str(phi_prev.shape())
                                                    : std::string("(none)")) +
                                " does not match half of " + shape_str(k_rgb.shape()));

  const Var phi_up = nn::resize_bilinear(phi_prev, h, w);
  const Var kr = apply_conv(params.project[0], k_rgb);
  const Var kf = apply_conv(params.project[1], k_flow);
  const Var kd = apply_conv(params.project[2], k_depth);

  Var d1, d2, d3;
  if (params.blocks[0].with_attention) {
    const MatchResult m_f = relevance_match(kr, kf);
    const MatchResult m_d = relevance_match(kr, kd);
    const MatchResult m_phi = relevance_match(kr, phi_up);
    d1 = attention_block(params.blocks[0], kr, kf, kd, m_f, m_d, ctx);
    d2 = attention_block(params.blocks[1], kr, kf, phi_up, m_f, m_phi, ctx);
    d3 = attention_block(params.blocks[2], kr, kd, phi_up, m_d, m_phi, ctx);
  } else {
    d1 = attention_block(params.blocks[0], kr, kf, kd, ctx);
    d2 = attention_block(params.blocks[1], kr, kf, phi_up, ctx);
    d3 = attention_block(params.blocks[2], kr, kd, phi_up, ctx);
  }
  const Var mixed = apply_conv(params.mix,
                               nn::softmax_channels(nn::concat_channels({d1, d2, d3})));
  return nn::add(phi_up, nn::max_pool2d(mixed, 3, 1, 1));
}

} // namespace atf
