// SPDX-License-Identifier: Apache-2.0
#include "atf/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "atf/error.hpp"
#include "blas.hpp"

namespace atf::nn {

namespace {

void require_4d(const Var &x, const char *op) {
  if (!x.defined() || x.value().rank() != 4)
    fail(ErrorKind::kShape, std::string(op) + " expects N x C x H x W, got " +
                                (x.defined() ? shape_str(x.shape()) : "none"));
}

void require_same(const Var &a, const Var &b, const char *op) {
  if (a.shape() != b.shape())
    fail(ErrorKind::kShape, std::string(op) + " shape " + shape_str(a.shape()) +
                                " vs " + shape_str(b.shape()));
}

std::size_t conv_out(std::size_t in, int k, int s, int p) {
  const long v = (static_cast<long>(in) + 2L * p - k) / s + 1;
  if (v <= 0)
    fail(ErrorKind::kShape, "convolution window larger than input");
  return static_cast<std::size_t>(v);
}

void im2col(const real *x, std::size_t c, std::size_t h, std::size_t w, int k,
            int s, int p, std::size_t ho, std::size_t wo, real *col) {
  const std::size_t plane = ho * wo;
  for (std::size_t ci = 0; ci < c; ++ci) {
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        real *row = col + ((ci * k + ki) * k + kj) * plane;
        for (std::size_t oh = 0; oh < ho; ++oh) {
          const long ih = static_cast<long>(oh) * s - p + ki;
          real *dst = row + oh * wo;
          if (ih < 0 || ih >= static_cast<long>(h)) {
            std::fill(dst, dst + wo, real{0});
            continue;
          }
          const real *src = x + (ci * h + ih) * w;
          for (std::size_t ow = 0; ow < wo; ++ow) {
            const long iw = static_cast<long>(ow) * s - p + kj;
            dst[ow] = (iw >= 0 && iw < static_cast<long>(w)) ? src[iw] : 0;
          }
        }
      }
    }
  }
}

void col2im(const real *col, std::size_t c, std::size_t h, std::size_t w,
            int k, int s, int p, std::size_t ho, std::size_t wo, real *x) {
  const std::size_t plane = ho * wo;
  for (std::size_t ci = 0; ci < c; ++ci) {
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        const real *row = col + ((ci * k + ki) * k + kj) * plane;
        for (std::size_t oh = 0; oh < ho; ++oh) {
          const long ih = static_cast<long>(oh) * s - p + ki;
          if (ih < 0 || ih >= static_cast<long>(h))
            continue;
          real *dst = x + (ci * h + ih) * w;
          const real *src = row + oh * wo;
          for (std::size_t ow = 0; ow < wo; ++ow) {
            const long iw = static_cast<long>(ow) * s - p + kj;
            if (iw >= 0 && iw < static_cast<long>(w))
              dst[iw] += src[ow];
          }
        }
      }
    }
  }
}

struct Interp {
  std::vector<std::size_t> i0, i1;
  std::vector<real> frac;
};

Interp bilinear_axis(std::size_t in, std::size_t out) {
  Interp t;
  t.i0.resize(out);
  t.i1.resize(out);
  t.frac.resize(out);
  const real ratio = static_cast<real>(in) / static_cast<real>(out);
  for (std::size_t o = 0; o < out; ++o) {
    real src = (static_cast<real>(o) + 0.5) * ratio - 0.5;
    if (src < 0)
      src = 0;
    auto lo = static_cast<std::size_t>(std::floor(src));
    if (lo > in - 1)
      lo = in - 1;
    t.i0[o] = lo;
    t.i1[o] = std::min(lo + 1, in - 1);
    t.frac[o] = src - static_cast<real>(lo);
  }
  return t;
}

} // namespace

Var conv2d(const Var &x, const Var &weight, const Var &bias, int stride,
           int padding) {
  require_4d(x, "conv2d");
  const Tensor &wt = weight.value();
  if (wt.rank() != 4 || wt.dim(2) != wt.dim(3))
    fail(ErrorKind::kShape, "conv2d weight " + shape_str(wt.shape()));
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t o = wt.dim(0);
  const int k = static_cast<int>(wt.dim(2));
  if (wt.dim(1) != c)
    fail(ErrorKind::kShape, "conv2d input channels " + std::to_string(c) +
                                " vs weight " + shape_str(wt.shape()));
  if (bias.defined() && bias.value().size() != o)
    fail(ErrorKind::kShape, "conv2d bias size");
  const std::size_t ho = conv_out(h, k, stride, padding);
  const std::size_t wo = conv_out(w, k, stride, padding);
  const std::size_t plane = ho * wo, ckk = c * k * k;
  const bool pointwise = k == 1 && stride == 1 && padding == 0;

  Tensor out({n, o, ho, wo});
  std::vector<real> col(pointwise ? 0 : ckk * plane);
  for (std::size_t b = 0; b < n; ++b) {
    const real *xb = x.value().ptr() + b * c * h * w;
    const real *src = xb;
    if (!pointwise) {
      im2col(xb, c, h, w, k, stride, padding, ho, wo, col.data());
      src = col.data();
    }
    real *yb = out.ptr() + b * o * plane;
    detail::gemm(false, false, o, plane, ckk, 1, wt.ptr(), src, 0, yb);
    if (bias.defined()) {
      const real *bv = bias.value().ptr();
      for (std::size_t oc = 0; oc < o; ++oc)
        for (std::size_t i = 0; i < plane; ++i)
          yb[oc * plane + i] += bv[oc];
    }
  }

  std::vector<Var> parents{x, weight};
  if (bias.defined())
    parents.push_back(bias);
  return Var::from_op(
      std::move(out), std::move(parents),
      [=](Node &self) {
        const Tensor &xv = self.parents[0]->value;
        const Tensor &wv = self.parents[1]->value;
        Tensor *gx = Var::grad_of(self.parents[0]);
        Tensor *gw = Var::grad_of(self.parents[1]);
        Tensor *gb = self.parents.size() > 2 ? Var::grad_of(self.parents[2])
                                             : nullptr;
        std::vector<real> colbuf(pointwise ? 0 : ckk * plane);
        std::vector<real> dcol(pointwise ? 0 : ckk * plane);
        for (std::size_t b = 0; b < n; ++b) {
          const real *dy = self.grad.ptr() + b * o * plane;
          const real *xb = xv.ptr() + b * c * h * w;
          if (gw) {
            const real *src = xb;
            if (!pointwise) {
              im2col(xb, c, h, w, k, stride, padding, ho, wo, colbuf.data());
              src = colbuf.data();
            }
            detail::gemm(false, true, o, ckk, plane, 1, dy, src, 1, gw->ptr());
          }
          if (gb) {
            for (std::size_t oc = 0; oc < o; ++oc) {
              real acc = 0;
              for (std::size_t i = 0; i < plane; ++i)
                acc += dy[oc * plane + i];
              (*gb)[oc] += acc;
            }
          }
          if (gx) {
            real *gxb = gx->ptr() + b * c * h * w;
            if (pointwise) {
              detail::gemm(true, false, ckk, plane, o, 1, wv.ptr(), dy, 1, gxb);
            } else {
              detail::gemm(true, false, ckk, plane, o, 1, wv.ptr(), dy, 0,
                           dcol.data());
              col2im(dcol.data(), c, h, w, k, stride, padding, ho, wo, gxb);
            }
          }
        }
      });
}

Var group_norm(const Var &x, const Var &gamma, const Var &beta,
               std::size_t groups, real eps) {
  require_4d(x, "group_norm");
  const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  if (groups == 0 || c % groups != 0)
    fail(ErrorKind::kChannel, "group_norm: " + std::to_string(c) +
                                  " channels not divisible into " +
                                  std::to_string(groups) + " groups");
  if (gamma.value().size() != c || beta.value().size() != c)
    fail(ErrorKind::kShape, "group_norm affine size");
  const std::size_t cpg = c / groups, count = cpg * hw;
  const real *xv = x.value().ptr();
  const real *g = gamma.value().ptr();
  const real *bt = beta.value().ptr();

  Tensor out(x.shape());
  Tensor xhat(x.shape());
  std::vector<real> inv_std(n * groups);
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t gi = 0; gi < groups; ++gi) {
      const std::size_t base = (b * c + gi * cpg) * hw;
      real mu = 0;
      for (std::size_t i = 0; i < count; ++i)
        mu += xv[base + i];
      mu /= static_cast<real>(count);
      real var = 0;
      for (std::size_t i = 0; i < count; ++i) {
        const real d = xv[base + i] - mu;
        var += d * d;
      }
      var /= static_cast<real>(count);
      const real inv = 1 / std::sqrt(var + eps);
      inv_std[b * groups + gi] = inv;
      for (std::size_t cc = 0; cc < cpg; ++cc) {
        const std::size_t ch = gi * cpg + cc;
        for (std::size_t i = 0; i < hw; ++i) {
          const std::size_t idx = base + cc * hw + i;
          const real xh = (xv[idx] - mu) * inv;
          xhat[idx] = xh;
          out[idx] = g[ch] * xh + bt[ch];
        }
      }
    }
  }

  return Var::from_op(
      std::move(out), {x, gamma, beta},
      [=, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node &self) {
        Tensor *gx = Var::grad_of(self.parents[0]);
        Tensor *gg = Var::grad_of(self.parents[1]);
        Tensor *gb = Var::grad_of(self.parents[2]);
        const real *gam = self.parents[1]->value.ptr();
        const real *dy = self.grad.ptr();
        for (std::size_t b = 0; b < n; ++b) {
          for (std::size_t gi = 0; gi < groups; ++gi) {
            const std::size_t base = (b * c + gi * cpg) * hw;
            real sum_d = 0, sum_dx = 0;
            for (std::size_t cc = 0; cc < cpg; ++cc) {
              const std::size_t ch = gi * cpg + cc;
              real acc_g = 0, acc_b = 0;
              for (std::size_t i = 0; i < hw; ++i) {
                const std::size_t idx = base + cc * hw + i;
                acc_g += dy[idx] * xhat[idx];
                acc_b += dy[idx];
                const real dxh = dy[idx] * gam[ch];
                sum_d += dxh;
                sum_dx += dxh * xhat[idx];
              }
              if (gg)
                (*gg)[ch] += acc_g;
              if (gb)
                (*gb)[ch] += acc_b;
            }
            if (!gx)
              continue;
            const real inv = inv_std[b * groups + gi];
            const real md = sum_d / static_cast<real>(count);
            const real mdx = sum_dx / static_cast<real>(count);
            for (std::size_t cc = 0; cc < cpg; ++cc) {
              const std::size_t ch = gi * cpg + cc;
              for (std::size_t i = 0; i < hw; ++i) {
                const std::size_t idx = base + cc * hw + i;
                const real dxh = dy[idx] * gam[ch];
                (*gx)[idx] += inv * (dxh - md - xhat[idx] * mdx);
              }
            }
          }
        }
      });
}

Var batch_norm(const Var &x, const Var &gamma, const Var &beta,
               Tensor &running_mean, Tensor &running_var, bool training,
               real momentum, real eps) {
  require_4d(x, "batch_norm");
  const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  if (gamma.value().size() != c || running_mean.size() != c ||
      running_var.size() != c)
    fail(ErrorKind::kShape, "batch_norm parameter size");
  const std::size_t count = n * hw;
  const real *xv = x.value().ptr();
  const real *g = gamma.value().ptr();
  const real *bt = beta.value().ptr();

  std::vector<real> mu(c), inv(c);
  for (std::size_t ch = 0; ch < c; ++ch) {
    if (training) {
      real m = 0;
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t i = 0; i < hw; ++i)
          m += xv[(b * c + ch) * hw + i];
      m /= static_cast<real>(count);
      real v = 0;
      for (std::size_t b = 0; b < n; ++b)
        for (std::size_t i = 0; i < hw; ++i) {
          const real d = xv[(b * c + ch) * hw + i] - m;
          v += d * d;
        }
      const real biased = v / static_cast<real>(count);
      const real unbiased =
          count > 1 ? v / static_cast<real>(count - 1) : biased;
      running_mean[ch] = (1 - momentum) * running_mean[ch] + momentum * m;
      running_var[ch] = (1 - momentum) * running_var[ch] + momentum * unbiased;
      mu[ch] = m;
      inv[ch] = 1 / std::sqrt(biased + eps);
    } else {
      mu[ch] = running_mean[ch];
      inv[ch] = 1 / std::sqrt(running_var[ch] + eps);
    }
  }

  Tensor out(x.shape());
  Tensor xhat(x.shape());
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t i = 0; i < hw; ++i) {
        const std::size_t idx = (b * c + ch) * hw + i;
        const real xh = (xv[idx] - mu[ch]) * inv[ch];
        xhat[idx] = xh;
        out[idx] = g[ch] * xh + bt[ch];
      }

  return Var::from_op(
      std::move(out), {x, gamma, beta},
      [=, xhat = std::move(xhat), inv = std::move(inv)](Node &self) {
        Tensor *gx = Var::grad_of(self.parents[0]);
        Tensor *gg = Var::grad_of(self.parents[1]);
        Tensor *gb = Var::grad_of(self.parents[2]);
        const real *gam = self.parents[1]->value.ptr();
        const real *dy = self.grad.ptr();
        for (std::size_t ch = 0; ch < c; ++ch) {
          real acc_g = 0, acc_b = 0;
          for (std::size_t b = 0; b < n; ++b)
            for (std::size_t i = 0; i < hw; ++i) {
              const std::size_t idx = (b * c + ch) * hw + i;
              acc_g += dy[idx] * xhat[idx];
              acc_b += dy[idx];
            }
          if (gg)
            (*gg)[ch] += acc_g;
          if (gb)
            (*gb)[ch] += acc_b;
          if (!gx)
            continue;
          const real md = acc_b * gam[ch] / static_cast<real>(count);
          const real mdx = acc_g * gam[ch] / static_cast<real>(count);
          for (std::size_t b = 0; b < n; ++b)
            for (std::size_t i = 0; i < hw; ++i) {
              const std::size_t idx = (b * c + ch) * hw + i;
              const real dxh = dy[idx] * gam[ch];
              (*gx)[idx] += training ? inv[ch] * (dxh - md - xhat[idx] * mdx)
                                     : inv[ch] * dxh;
            }
        }
      });
}

Var relu(const Var &x) {
  Tensor out = x.value();
  for (auto &v : out.data())
    v = v > 0 ? v : 0;
  return Var::from_op(std::move(out), {x}, [](Node &self) {
    Tensor *gx = Var::grad_of(self.parents[0]);
    if (!gx)
      return;
    const real *xv = self.parents[0]->value.ptr();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      if (xv[i] > 0)
        (*gx)[i] += self.grad[i];
  });
}

Var sigmoid(const Var &x) {
  Tensor out = x.value();
  for (auto &v : out.data())
    v = v >= 0 ? 1 / (1 + std::exp(-v)) : std::exp(v) / (1 + std::exp(v));
  return Var::from_op(std::move(out), {x}, [](Node &self) {
    Tensor *gx = Var::grad_of(self.parents[0]);
    if (!gx)
      return;
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const real y = self.value[i];
      (*gx)[i] += self.grad[i] * y * (1 - y);
    }
  });
}

Var add(const Var &a, const Var &b) {
  require_same(a, b, "add");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] += b.value()[i];
  return Var::from_op(std::move(out), {a, b}, [](Node &self) {
    for (auto &p : self.parents)
      if (Tensor *g = Var::grad_of(p))
        for (std::size_t i = 0; i < self.grad.size(); ++i)
          (*g)[i] += self.grad[i];
  });
}

Var mul(const Var &a, const Var &b) {
  require_same(a, b, "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] *= b.value()[i];
  return Var::from_op(std::move(out), {a, b}, [](Node &self) {
    const Tensor &av = self.parents[0]->value;
    const Tensor &bv = self.parents[1]->value;
    if (Tensor *ga = Var::grad_of(self.parents[0]))
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        (*ga)[i] += self.grad[i] * bv[i];
    if (Tensor *gb = Var::grad_of(self.parents[1]))
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        (*gb)[i] += self.grad[i] * av[i];
  });
}

Var scale(const Var &x, real factor) {
  Tensor out = x.value();
  for (auto &v : out.data())
    v *= factor;
  return Var::from_op(std::move(out), {x}, [factor](Node &self) {
    if (Tensor *g = Var::grad_of(self.parents[0]))
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        (*g)[i] += factor * self.grad[i];
  });
}

Var mul_position_gate(const Var &x, const Var &gate) {
  require_4d(x, "mul_position_gate");
  require_4d(gate, "mul_position_gate");
  const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  if (gate.dim(0) != n || gate.dim(1) != 1 || gate.dim(2) != x.dim(2) ||
      gate.dim(3) != x.dim(3))
    fail(ErrorKind::kShape, "gate " + shape_str(gate.shape()) + " for " +
                                shape_str(x.shape()));
  Tensor out = x.value();
  const real *gv = gate.value().ptr();
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t i = 0; i < hw; ++i)
        out[(b * c + ch) * hw + i] *= gv[b * hw + i];
  return Var::from_op(std::move(out), {x, gate}, [=](Node &self) {
    const real *xv = self.parents[0]->value.ptr();
    const real *gv2 = self.parents[1]->value.ptr();
    Tensor *gx = Var::grad_of(self.parents[0]);
    Tensor *gg = Var::grad_of(self.parents[1]);
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t i = 0; i < hw; ++i) {
          const std::size_t idx = (b * c + ch) * hw + i;
          if (gx)
            (*gx)[idx] += self.grad[idx] * gv2[b * hw + i];
          if (gg)
            (*gg)[b * hw + i] += self.grad[idx] * xv[idx];
        }
  });
}

Var concat_channels(std::span<const Var> parts) {
  if (parts.empty())
    fail(ErrorKind::kShape, "concat of nothing");
  for (const auto &p : parts)
    require_4d(p, "concat_channels");
  const std::size_t n = parts[0].dim(0), h = parts[0].dim(2),
                    w = parts[0].dim(3), hw = h * w;
  std::size_t c_total = 0;
  std::vector<std::size_t> widths;
  for (const auto &p : parts) {
    if (p.dim(0) != n || p.dim(2) != h || p.dim(3) != w)
      fail(ErrorKind::kShape, "concat " + shape_str(p.shape()) + " vs " +
                                  shape_str(parts[0].shape()));
    widths.push_back(p.dim(1));
    c_total += p.dim(1);
  }
  Tensor out({n, c_total, h, w});
  for (std::size_t b = 0; b < n; ++b) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      const real *src = parts[k].value().ptr() + b * widths[k] * hw;
      std::copy(src, src + widths[k] * hw, out.ptr() + (b * c_total + off) * hw);
      off += widths[k];
    }
  }
  std::vector<Var> parents(parts.begin(), parts.end());
  return Var::from_op(std::move(out), std::move(parents),
                      [=](Node &self) {
                        for (std::size_t b = 0; b < n; ++b) {
                          std::size_t off = 0;
                          for (std::size_t k = 0; k < widths.size(); ++k) {
                            if (Tensor *g = Var::grad_of(self.parents[k])) {
                              const real *src =
                                  self.grad.ptr() + (b * c_total + off) * hw;
                              real *dst = g->ptr() + b * widths[k] * hw;
                              for (std::size_t i = 0; i < widths[k] * hw; ++i)
                                dst[i] += src[i];
                            }
                            off += widths[k];
                          }
                        }
                      });
}

Var max_pool2d(const Var &x, int kernel, int stride, int padding) {
  require_4d(x, "max_pool2d");
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t ho = conv_out(h, kernel, stride, padding);
  const std::size_t wo = conv_out(w, kernel, stride, padding);
  Tensor out({n, c, ho, wo});
  std::vector<std::size_t> arg(out.size());
  const real *xv = x.value().ptr();
  for (std::size_t bc = 0; bc < n * c; ++bc) {
    const real *plane = xv + bc * h * w;
    for (std::size_t oh = 0; oh < ho; ++oh)
      for (std::size_t ow = 0; ow < wo; ++ow) {
        real best = -std::numeric_limits<real>::infinity();
        std::size_t best_i = 0;
        bool found = false;
        for (int ki = 0; ki < kernel; ++ki) {
          const long ih = static_cast<long>(oh) * stride - padding + ki;
          if (ih < 0 || ih >= static_cast<long>(h))
            continue;
          for (int kj = 0; kj < kernel; ++kj) {
            const long iw = static_cast<long>(ow) * stride - padding + kj;
            if (iw < 0 || iw >= static_cast<long>(w))
              continue;
            const std::size_t idx = static_cast<std::size_t>(ih) * w +
                                    static_cast<std::size_t>(iw);
            if (!found || plane[idx] > best) {
              best = plane[idx];
              best_i = idx;
              found = true;
            }
          }
        }
        const std::size_t o = (bc * ho + oh) * wo + ow;
        out[o] = best;
        arg[o] = bc * h * w + best_i;
      }
  }
  return Var::from_op(std::move(out), {x},
                      [arg = std::move(arg)](Node &self) {
                        if (Tensor *g = Var::grad_of(self.parents[0]))
                          for (std::size_t o = 0; o < arg.size(); ++o)
                            (*g)[arg[o]] += self.grad[o];
                      });
}

Tensor resize_bilinear(const Tensor &x, std::size_t out_h, std::size_t out_w) {
  if (x.rank() != 4)
    fail(ErrorKind::kShape, "resize_bilinear expects 4-D input");
  const std::size_t nc = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  if (out_h == 0 || out_w == 0 || h == 0 || w == 0)
    fail(ErrorKind::kShape, "resize_bilinear to empty size");
  const Interp ty = bilinear_axis(h, out_h), tx = bilinear_axis(w, out_w);
  Tensor out({x.dim(0), x.dim(1), out_h, out_w});
  for (std::size_t p = 0; p < nc; ++p) {
    const real *src = x.ptr() + p * h * w;
    real *dst = out.ptr() + p * out_h * out_w;
    for (std::size_t oy = 0; oy < out_h; ++oy) {
      const real fy = ty.frac[oy];
      const real *r0 = src + ty.i0[oy] * w;
      const real *r1 = src + ty.i1[oy] * w;
      for (std::size_t ox = 0; ox < out_w; ++ox) {
        const real fx = tx.frac[ox];
        const real top = r0[tx.i0[ox]] * (1 - fx) + r0[tx.i1[ox]] * fx;
        const real bot = r1[tx.i0[ox]] * (1 - fx) + r1[tx.i1[ox]] * fx;
        dst[oy * out_w + ox] = top * (1 - fy) + bot * fy;
      }
    }
  }
  return out;
}

Var resize_bilinear(const Var &x, std::size_t out_h, std::size_t out_w) {
  require_4d(x, "resize_bilinear");
  Tensor out = resize_bilinear(x.value(), out_h, out_w);
  const std::size_t nc = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
  return Var::from_op(std::move(out), {x}, [=](Node &self) {
    Tensor *g = Var::grad_of(self.parents[0]);
    if (!g)
      return;
    const Interp ty = bilinear_axis(h, out_h), tx = bilinear_axis(w, out_w);
    for (std::size_t p = 0; p < nc; ++p) {
      const real *dy = self.grad.ptr() + p * out_h * out_w;
      real *dst = g->ptr() + p * h * w;
      for (std::size_t oy = 0; oy < out_h; ++oy) {
        const real fy = ty.frac[oy];
        real *r0 = dst + ty.i0[oy] * w;
        real *r1 = dst + ty.i1[oy] * w;
        for (std::size_t ox = 0; ox < out_w; ++ox) {
          const real fx = tx.frac[ox];
          const real v = dy[oy * out_w + ox];
          r0[tx.i0[ox]] += v * (1 - fy) * (1 - fx);
          r0[tx.i1[ox]] += v * (1 - fy) * fx;
          r1[tx.i0[ox]] += v * fy * (1 - fx);
          r1[tx.i1[ox]] += v * fy * fx;
        }
      }
    }
  });
}

Var softmax_channels(const Var &x) {
  require_4d(x, "softmax_channels");
  const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  Tensor out(x.shape());
  const real *xv = x.value().ptr();
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t i = 0; i < hw; ++i) {
      real mx = -std::numeric_limits<real>::infinity();
      for (std::size_t ch = 0; ch < c; ++ch)
        mx = std::max(mx, xv[(b * c + ch) * hw + i]);
      real z = 0;
      for (std::size_t ch = 0; ch < c; ++ch) {
        const std::size_t idx = (b * c + ch) * hw + i;
        out[idx] = std::exp(xv[idx] - mx);
        z += out[idx];
      }
      for (std::size_t ch = 0; ch < c; ++ch)
        out[(b * c + ch) * hw + i] /= z;
    }
  return Var::from_op(std::move(out), {x}, [=](Node &self) {
    Tensor *g = Var::grad_of(self.parents[0]);
    if (!g)
      return;
    for (std::size_t b = 0; b < n; ++b)
      for (std::size_t i = 0; i < hw; ++i) {
        real dot = 0;
        for (std::size_t ch = 0; ch < c; ++ch) {
          const std::size_t idx = (b * c + ch) * hw + i;
          dot += self.grad[idx] * self.value[idx];
        }
        for (std::size_t ch = 0; ch < c; ++ch) {
          const std::size_t idx = (b * c + ch) * hw + i;
          (*g)[idx] += self.value[idx] * (self.grad[idx] - dot);
        }
      }
  });
}

Var sum(const Var &x) {
  real acc = 0;
  for (real v : x.value().data())
    acc += v;
  return Var::from_op(Tensor({1}, acc), {x}, [](Node &self) {
    if (Tensor *g = Var::grad_of(self.parents[0]))
      for (auto &v : g->data())
        v += self.grad[0];
  });
}

Var mean(const Var &x) {
  const auto count = static_cast<real>(x.value().size());
  return scale(sum(x), 1 / count);
}

} // namespace atf::nn
