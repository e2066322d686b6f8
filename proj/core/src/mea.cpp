// SPDX-License-Identifier: Apache-2.0
#include "atf/mea.hpp"

#include <algorithm>
#include <cmath>

#include "atf/error.hpp"
#include "atf/ops.hpp"
#include "blas.hpp"
#include "fast_exp.hpp"

namespace atf {

namespace {

void transpose(const real *src, std::size_t rows, std::size_t cols, real *dst) {
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      dst[c * rows + r] = src[r * cols + c];
}

// Rows per block so that one block of logits stays around 16 MiB.
std::size_t block_rows(std::size_t positions) {
  return std::clamp<std::size_t>((std::size_t{1} << 21) / positions, 1,
                                 positions);
}

void softmax_rows(real *logits, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    real *row = logits + r * cols;
    const real mx = *std::max_element(row, row + cols);
    for (std::size_t c = 0; c < cols; ++c)
      row[c] = detail::exp_nonpositive(row[c] - mx);
    real part[4] = {0, 0, 0, 0};
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4)
      for (std::size_t j = 0; j < 4; ++j)
        part[j] += row[c + j];
    for (; c < cols; ++c)
      part[0] += row[c];
    const real inv = 1 / ((part[0] + part[1]) + (part[2] + part[3]));
    for (c = 0; c < cols; ++c)
      row[c] *= inv;
  }
}

void check_pair(const Var &d, const Var &f) {
  if (!d.defined() || !f.defined() || d.value().rank() != 4 ||
      d.shape() != f.shape())
    fail(ErrorKind::kShape, "affinity_transfer needs equal N x k x h x w inputs");
}

} // namespace

Var affinity_transfer(const Var &depth_reduced, const Var &flow_reduced) {
  check_pair(depth_reduced, flow_reduced);
  const std::size_t n = depth_reduced.dim(0), k = depth_reduced.dim(1);
  const std::size_t wh = depth_reduced.dim(2) * depth_reduced.dim(3);
  const std::size_t bm_max = block_rows(wh);

  Tensor out(depth_reduced.shape());
  std::vector<real> dt(wh * k), ft(wh * k), logits(bm_max * wh);
  for (std::size_t b = 0; b < n; ++b) {
    const real *dm = depth_reduced.value().ptr() + b * k * wh;
    const real *fm = flow_reduced.value().ptr() + b * k * wh;
    real *om = out.ptr() + b * k * wh;
    transpose(dm, k, wh, dt.data());
    transpose(fm, k, wh, ft.data());
    for (std::size_t m0 = 0; m0 < wh; m0 += bm_max) {
      const std::size_t bm = std::min(bm_max, wh - m0);
      detail::gemm(false, false, bm, wh, k, 1, dt.data() + m0 * k, fm, 0,
                   logits.data());
      softmax_rows(logits.data(), bm, wh);
      detail::gemm(true, false, k, wh, bm, 1, ft.data() + m0 * k,
                   logits.data(), 1, om);
    }
  }

  return Var::from_op(
      std::move(out), {depth_reduced, flow_reduced}, [=](Node &self) {
        Tensor *gd = Var::grad_of(self.parents[0]);
        Tensor *gf = Var::grad_of(self.parents[1]);
        std::vector<real> dt(wh * k), ft(wh * k), attn(bm_max * wh),
            dattn(bm_max * wh), gdt(wh * k), gft(wh * k), gfm(k * wh);
        for (std::size_t b = 0; b < n; ++b) {
          const real *dm = self.parents[0]->value.ptr() + b * k * wh;
          const real *fm = self.parents[1]->value.ptr() + b * k * wh;
          const real *dout = self.grad.ptr() + b * k * wh;
          transpose(dm, k, wh, dt.data());
          transpose(fm, k, wh, ft.data());
          std::fill(gdt.begin(), gdt.end(), 0);
          std::fill(gft.begin(), gft.end(), 0);
          std::fill(gfm.begin(), gfm.end(), 0);
          for (std::size_t m0 = 0; m0 < wh; m0 += bm_max) {
            const std::size_t bm = std::min(bm_max, wh - m0);
            detail::gemm(false, false, bm, wh, k, 1, dt.data() + m0 * k, fm, 0,
                         attn.data());
            softmax_rows(attn.data(), bm, wh);
            // dA = Ft[rows] dOut ; dFt[rows] += A dOut^T
            detail::gemm(false, false, bm, wh, k, 1, ft.data() + m0 * k, dout, 0,
                         dattn.data());
            detail::gemm(false, true, bm, k, wh, 1, attn.data(), dout, 1,
                         gft.data() + m0 * k);
            for (std::size_t r = 0; r < bm; ++r) {
              real *a = attn.data() + r * wh;
              real *da = dattn.data() + r * wh;
              real dot = 0;
              for (std::size_t c = 0; c < wh; ++c)
                dot += a[c] * da[c];
              for (std::size_t c = 0; c < wh; ++c)
                da[c] = a[c] * (da[c] - dot);
            }
            // logits = Dt[rows] Fm
            detail::gemm(false, true, bm, k, wh, 1, dattn.data(), fm, 1,
                         gdt.data() + m0 * k);
            detail::gemm(true, false, k, wh, bm, 1, dt.data() + m0 * k,
                         dattn.data(), 1, gfm.data());
          }
          if (gd) {
            real *g = gd->ptr() + b * k * wh;
            for (std::size_t m = 0; m < wh; ++m)
              for (std::size_t c = 0; c < k; ++c)
                g[c * wh + m] += gdt[m * k + c];
          }
          if (gf) {
            real *g = gf->ptr() + b * k * wh;
            for (std::size_t m = 0; m < wh; ++m)
              for (std::size_t c = 0; c < k; ++c)
                g[c * wh + m] += gft[m * k + c] + gfm[c * wh + m];
          }
        }
      });
}

Tensor affinity_matrix(const Tensor &depth_reduced, const Tensor &flow_reduced,
                       std::size_t n) {
  if (depth_reduced.rank() != 4 || depth_reduced.shape() != flow_reduced.shape() ||
      n >= depth_reduced.dim(0))
    fail(ErrorKind::kShape, "affinity_matrix needs equal N x k x h x w inputs");
  const std::size_t k = depth_reduced.dim(1);
  const std::size_t wh = depth_reduced.dim(2) * depth_reduced.dim(3);
  std::vector<real> dt(wh * k);
  transpose(depth_reduced.ptr() + n * k * wh, k, wh, dt.data());
  Tensor a({wh, wh});
  detail::gemm(false, false, wh, wh, k, 1, dt.data(),
               flow_reduced.ptr() + n * k * wh, 0, a.ptr());
  softmax_rows(a.ptr(), wh, wh);
  return a;
}

MeaParams build_mea(ParamStore &store, const std::string &prefix,
                    std::size_t level, std::size_t channels, std::size_t c_fuse,
                    const NormSpec &norm, Rng &rng) {
  if (channels == 0 || channels % 2 != 0)
    fail(ErrorKind::kChannel, prefix + ": MEA needs an even channel count, got " +
                                  std::to_string(channels));
  if (level < 1 || level > 5)
    fail(ErrorKind::kConfig, prefix + ": MEA level must be in 1..5");
  const std::size_t half = channels / 2;
  MeaParams p;
  p.level = level;
  p.channels = channels;
  p.reduce_rgb = make_projection(store, prefix + ".reduce_rgb", channels, half, rng);
  p.reduce_flow = make_projection(store, prefix + ".reduce_flow", channels, half, rng);
  p.reduce_depth = make_projection(store, prefix + ".reduce_depth", channels, half, rng);
  p.fuse_proj = make_projection(store, prefix + ".fuse_proj", channels + half, half, rng);
  p.rgb_fuse = make_bconv(store, prefix + ".rgb_fuse", channels, c_fuse, norm, rng);
  p.theta = make_bconv(store, prefix + ".theta", level == 1 ? c_fuse : 2 * c_fuse,
                       c_fuse, norm, rng);
  return p;
}

Var mea_forward(const MeaParams &params, const Var &f_rgb, const Var &f_flow,
                const Var &f_depth, const std::optional<Var> &theta_prev,
                const RunContext &ctx, MeaIntermediates *inspect) {
  for (const Var *v : {&f_rgb, &f_flow, &f_depth})
    if (!v->defined() || v->value().rank() != 4)
      fail(ErrorKind::kShape, "MEA inputs must be N x c x w x h");
  if (f_rgb.shape() != f_flow.shape() || f_rgb.shape() != f_depth.shape())
    fail(ErrorKind::kShape, "MEA inputs differ: " + shape_str(f_rgb.shape()) +
                                ", " + shape_str(f_flow.shape()) + ", " +
                                shape_str(f_depth.shape()));
  if (f_rgb.dim(1) % 2 != 0)
    fail(ErrorKind::kChannel, "MEA input channels must be even, got " +
                                  std::to_string(f_rgb.dim(1)));
  if (f_rgb.dim(1) != params.channels)
    fail(ErrorKind::kShape, "MEA_" + std::to_string(params.level) + " expects " +
                                std::to_string(params.channels) + " channels");
  if (params.level == 1 && theta_prev)
    fail(ErrorKind::kShape, "MEA_1 takes no previous aggregate");
  if (params.level > 1 && !theta_prev)
    fail(ErrorKind::kShape, "MEA_" + std::to_string(params.level) +
                                " requires the previous aggregate");

  Var r = apply_conv(params.reduce_rgb, f_rgb);
  Var f = apply_conv(params.reduce_flow, f_flow);
  Var d = apply_conv(params.reduce_depth, f_depth);
  Var transferred = affinity_transfer(d, f);
  Var b = nn::max_pool2d(
      apply_conv(params.fuse_proj, nn::concat_channels({f_depth, transferred})),
      3, 1, 1);
  Var c = bconv(params.rgb_fuse, nn::concat_channels({nn::mul(r, b), r}), ctx);

  Var theta;
  if (params.level == 1) {
    theta = bconv(params.theta, c, ctx);
  } else {
    const Var &prev = *theta_prev;
    if (prev.value().rank() != 4 || prev.dim(2) != 2 * c.dim(2) ||
        prev.dim(3) != 2 * c.dim(3))
      fail(ErrorKind::kShape, "previous aggregate " + shape_str(prev.shape()) +
                                  " must be twice the spatial size of " +
                                  shape_str(c.shape()));
    theta = bconv(params.theta,
                  nn::concat_channels({nn::max_pool2d(prev, 2, 2, 0), c}), ctx);
  }

  if (inspect) {
    inspect->affinity = affinity_matrix(d.value(), f.value());
    inspect->fused = b.value();
    inspect->rgb_fused = c.value();
  }
  return theta;
}

ConcatFuseParams build_concat_fuse(ParamStore &store, const std::string &prefix,
                                   std::size_t in_channels, std::size_t out,
                                   Rng &rng) {
  return {make_projection(store, prefix + ".proj", in_channels, out, rng)};
}

Var concat_fuse(const ConcatFuseParams &params, std::span<const Var> parts) {
  return apply_conv(params.proj, nn::concat_channels(parts));
}

} // namespace atf
