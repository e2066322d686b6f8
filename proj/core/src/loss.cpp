// SPDX-License-Identifier: Apache-2.0
#include "atf/loss.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "atf/error.hpp"
#include "atf/ops.hpp"

namespace atf {

void LossConfig::validate() const {
  if (lambda1 < 0 || lambda2 < 0 || lambda3 < 0)
    fail(ErrorKind::kConfig, "loss lambdas must be non-negative");
  if (window == 0 || window % 2 == 0)
    fail(ErrorKind::kConfig, "loss window must be odd");
  if (!(clamp_eps > 0 && clamp_eps < 0.5))
    fail(ErrorKind::kConfig, "loss clamp eps must lie in (0, 0.5)");
  if (weight_multiplier < 0 || smooth <= 0)
    fail(ErrorKind::kConfig, "loss weight multiplier must be >= 0, smooth > 0");
}

Tensor ppa_weights(const Tensor &gt, const LossConfig &cfg) {
  if (gt.rank() != 4 || gt.dim(1) != 1)
    fail(ErrorKind::kShape, "ground truth must be N x 1 x H x W, got " +
                                shape_str(gt.shape()));
  const std::size_t n = gt.dim(0), h = gt.dim(2), w = gt.dim(3);
  const auto r = static_cast<std::ptrdiff_t>(cfg.window / 2);
  const real area = static_cast<real>(cfg.window * cfg.window);
  Tensor out(gt.shape());
  // Summed-area table with a zero row and column in front.
  std::vector<real> sat((h + 1) * (w + 1));
  for (std::size_t b = 0; b < n; ++b) {
    const real *g = gt.ptr() + b * h * w;
    std::fill(sat.begin(), sat.end(), 0);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        sat[(y + 1) * (w + 1) + x + 1] = g[y * w + x] + sat[y * (w + 1) + x + 1] +
                                         sat[(y + 1) * (w + 1) + x] -
                                         sat[y * (w + 1) + x];
    auto clampi = [](std::ptrdiff_t v, std::size_t hi) {
      return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(
          v, 0, static_cast<std::ptrdiff_t>(hi)));
    };
    real *o = out.ptr() + b * h * w;
    for (std::size_t y = 0; y < h; ++y) {
      const auto yi = static_cast<std::ptrdiff_t>(y);
      const std::size_t y0 = clampi(yi - r, h), y1 = clampi(yi + r + 1, h);
      for (std::size_t x = 0; x < w; ++x) {
        const auto xi = static_cast<std::ptrdiff_t>(x);
        const std::size_t x0 = clampi(xi - r, w), x1 = clampi(xi + r + 1, w);
        const real box = sat[y1 * (w + 1) + x1] - sat[y0 * (w + 1) + x1] -
                         sat[y1 * (w + 1) + x0] + sat[y0 * (w + 1) + x0];
        o[y * w + x] = 1 + cfg.weight_multiplier * std::abs(box / area - g[y * w + x]);
      }
    }
  }
  return out;
}

Var ppa_loss(const Var &s, const Tensor &gt, const LossConfig &cfg) {
  if (!s.defined() || s.shape() != gt.shape())
    fail(ErrorKind::kShape, "prediction " +
                                (s.defined() ? shape_str(s.shape()) : std::string("(none)")) +
                                " and ground truth " + shape_str(gt.shape()) + " differ");
  const Tensor weights = ppa_weights(gt, cfg);
  const std::size_t n = gt.dim(0), hw = gt.dim(2) * gt.dim(3);
  const real lo = cfg.clamp_eps, hi = 1 - cfg.clamp_eps, smooth = cfg.smooth;

  struct Sums {
    real w = 0, inter = 0, uni = 0;
  };
  std::vector<Sums> sums(n);
  real total = 0;
  for (std::size_t b = 0; b < n; ++b) {
    const real *sp = s.value().ptr() + b * hw;
    const real *gp = gt.ptr() + b * hw;
    const real *wp = weights.ptr() + b * hw;
    real bce = 0;
    Sums &acc = sums[b];
    for (std::size_t i = 0; i < hw; ++i) {
      const real p = std::clamp(sp[i], lo, hi), g = gp[i], w = wp[i];
      bce += w * -(g * std::log(p) + (1 - g) * std::log(1 - p));
      acc.w += w;
      acc.inter += w * p * g;
      acc.uni += w * (p + g);
    }
    total += bce / acc.w +
             1 - (acc.inter + smooth) / (acc.uni - acc.inter + smooth);
  }
  const real inv_n = 1 / static_cast<real>(n);

  return Var::from_op(
      Tensor({1}, total * inv_n), {s}, [=](Node &self) {
        Tensor *gs = Var::grad_of(self.parents[0]);
        if (!gs)
          return;
        const real seed = self.grad[0] * inv_n;
        for (std::size_t b = 0; b < n; ++b) {
          const Sums &acc = sums[b];
          const real den = acc.uni - acc.inter + smooth;
          const real d_inter = -(acc.uni + 2 * smooth) / (den * den);
          const real d_uni = (acc.inter + smooth) / (den * den);
          const real *sp = self.parents[0]->value.ptr() + b * hw;
          const real *gp = gt.ptr() + b * hw;
          const real *wp = weights.ptr() + b * hw;
          real *out = gs->ptr() + b * hw;
          for (std::size_t i = 0; i < hw; ++i) {
            if (sp[i] < lo || sp[i] > hi)
              continue;
            const real p = sp[i], g = gp[i], w = wp[i];
            const real d_bce = w * (-g / p + (1 - g) / (1 - p)) / acc.w;
            out[i] += seed * (d_bce + d_inter * w * g + d_uni * w);
          }
        }
      });
}

LossBreakdown total_loss(const SaliencyOutputs &outputs, const Tensor &gt,
                         const LossConfig &cfg) {
  cfg.validate();
  if (!outputs.s_rgb.defined() || !outputs.s_f.defined())
    fail(ErrorKind::kShape, "total_loss needs the rgb and fused maps");
  LossBreakdown out;
  const Var rgb = ppa_loss(outputs.s_rgb, gt, cfg);
  out.rgb = rgb.value()[0];
  Var total = rgb;
  auto accumulate = [&](const Var &map, real lambda, real &slot) {
    if (!map.defined())
      return;
    const Var term = ppa_loss(map, gt, cfg);
    slot = term.value()[0];
    total = nn::add(total, nn::scale(term, lambda));
  };
  accumulate(outputs.s_depth, cfg.lambda1, out.depth);
  accumulate(outputs.s_flow, cfg.lambda2, out.flow);
  accumulate(outputs.s_f, cfg.lambda3, out.fused);
  out.total = total;
  return out;
}

} // namespace atf
