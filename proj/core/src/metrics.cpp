// SPDX-License-Identifier: Apache-2.0
#include "atf/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "atf/config.hpp"
#include "atf/error.hpp"

namespace atf {

namespace {

constexpr real kEps = 2.220446049250313e-16;

struct MapView {
  const real *s;
  const real *g;
  std::size_t h, w;
  std::size_t size() const { return h * w; }
};

MapView view(const Tensor &s, const Tensor &g) {
  if (s.shape() != g.shape() || s.rank() < 2)
    fail(ErrorKind::kShape, "prediction " + shape_str(s.shape()) +
                                " and ground truth " + shape_str(g.shape()) +
                                " must be equal H x W maps");
  for (std::size_t i = 0; i + 2 < s.rank(); ++i)
    if (s.dim(i) != 1)
      fail(ErrorKind::kShape, "metrics take single maps, got " + shape_str(s.shape()));
  const std::size_t h = s.dim(s.rank() - 2), w = s.dim(s.rank() - 1);
  if (h == 0 || w == 0)
    fail(ErrorKind::kShape, "empty saliency map");
  return {s.ptr(), g.ptr(), h, w};
}

real threshold(std::size_t k, std::size_t count) {
  return static_cast<real>(k) / static_cast<real>(count - 1);
}

// Per threshold k: number of predicted positives and true positives.
struct Sweep {
  std::vector<std::size_t> pos, tp;
  std::size_t fg = 0, n = 0;
};

Sweep sweep(const MapView &m, std::size_t count) {
  // top[k + 1] counts pixels whose highest exceeded threshold is k.
  std::vector<std::size_t> top(count + 1, 0), top_fg(count + 1, 0);
  const auto last = static_cast<std::ptrdiff_t>(count - 1);
  Sweep out;
  out.n = m.size();
  for (std::size_t i = 0; i < m.size(); ++i) {
    const real s = m.s[i];
    auto k = static_cast<std::ptrdiff_t>(std::floor(s * static_cast<real>(last)));
    k = std::clamp<std::ptrdiff_t>(k, -1, last);
    while (k >= 0 && !(s > threshold(static_cast<std::size_t>(k), count)))
      --k;
    while (k < last && s > threshold(static_cast<std::size_t>(k + 1), count))
      ++k;
    const bool fg = m.g[i] > 0.5;
    out.fg += fg;
    ++top[static_cast<std::size_t>(k + 1)];
    if (fg)
      ++top_fg[static_cast<std::size_t>(k + 1)];
  }
  out.pos.assign(count, 0);
  out.tp.assign(count, 0);
  std::size_t acc = 0, acc_fg = 0;
  for (std::size_t k = count; k-- > 0;) {
    acc += top[k + 1];
    acc_fg += top_fg[k + 1];
    out.pos[k] = acc;
    out.tp[k] = acc_fg;
  }
  return out;
}

real f_value(std::size_t tp, std::size_t pos, std::size_t fg, real beta2) {
  if (tp == 0 || pos == 0)
    return 0;
  const real p = static_cast<real>(tp) / static_cast<real>(pos);
  const real r = static_cast<real>(tp) / static_cast<real>(fg);
  return (1 + beta2) * p * r / (beta2 * p + r);
}

real e_value(std::size_t tp, std::size_t pos, std::size_t fg, std::size_t n) {
  const real nn = static_cast<real>(n);
  if (fg == 0)
    return static_cast<real>(n - pos) / nn;
  if (fg == n)
    return static_cast<real>(pos) / nn;
  const real mu_s = static_cast<real>(pos) / nn, mu_g = static_cast<real>(fg) / nn;
  // Pixel classes (prediction, truth): counts and enhanced values.
  const std::array<std::size_t, 4> counts = {n - pos - fg + tp, fg - tp, pos - tp, tp};
  real total = 0;
  for (int cls = 0; cls < 4; ++cls) {
    const real ps = (cls >> 1) - mu_s, pg = (cls & 1) - mu_g;
    const real xi = 2 * pg * ps / (pg * pg + ps * ps + kEps);
    total += static_cast<real>(counts[cls]) * (1 + xi) * (1 + xi) / 4;
  }
  return total / nn;
}

real mean_of(const real *v, std::size_t n) {
  real acc = 0;
  for (std::size_t i = 0; i < n; ++i)
    acc += v[i];
  return acc / static_cast<real>(n);
}

// Object similarity of the values of `s` where `mask` holds.
real object_score(const std::vector<real> &values) {
  if (values.empty())
    return 0;
  const real n = static_cast<real>(values.size());
  real mu = 0;
  for (real v : values)
    mu += v;
  mu /= n;
  real var = 0;
  for (real v : values)
    var += (v - mu) * (v - mu);
  const real sigma = values.size() > 1 ? std::sqrt(var / (n - 1)) : 0;
  return 2 * mu / (mu * mu + 1 + sigma + kEps);
}

real s_object(const MapView &m) {
  std::vector<real> fg_vals, bg_vals;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m.g[i] > 0.5)
      fg_vals.push_back(m.s[i]);
    else
      bg_vals.push_back(1 - m.s[i]);
  }
  const real u = static_cast<real>(fg_vals.size()) / static_cast<real>(m.size());
  return u * object_score(fg_vals) + (1 - u) * object_score(bg_vals);
}

real region_ssim(const MapView &m, std::size_t y0, std::size_t y1,
                 std::size_t x0, std::size_t x1) {
  const std::size_t count = (y1 - y0) * (x1 - x0);
  if (count == 0)
    return 0;
  const real n = static_cast<real>(count);
  real mx = 0, my = 0;
  for (std::size_t y = y0; y < y1; ++y)
    for (std::size_t x = x0; x < x1; ++x) {
      mx += m.s[y * m.w + x];
      my += m.g[y * m.w + x];
    }
  mx /= n;
  my /= n;
  real sxx = 0, syy = 0, sxy = 0;
  for (std::size_t y = y0; y < y1; ++y)
    for (std::size_t x = x0; x < x1; ++x) {
      const real dx = m.s[y * m.w + x] - mx, dy = m.g[y * m.w + x] - my;
      sxx += dx * dx;
      syy += dy * dy;
      sxy += dx * dy;
    }
  const real denom = n - 1 + kEps;
  sxx /= denom;
  syy /= denom;
  sxy /= denom;
  const real a = 4 * mx * my * sxy;
  const real b = (mx * mx + my * my) * (sxx + syy);
  if (a != 0)
    return a / (b + kEps);
  return b == 0 ? 1 : 0;
}

real s_region(const MapView &m) {
  // 1-based rounded centroid; left/top parts span columns/rows 1..X / 1..Y.
  real total = 0, sx = 0, sy = 0;
  for (std::size_t y = 0; y < m.h; ++y)
    for (std::size_t x = 0; x < m.w; ++x) {
      const real g = m.g[y * m.w + x] > 0.5 ? 1 : 0;
      total += g;
      sx += g * static_cast<real>(x + 1);
      sy += g * static_cast<real>(y + 1);
    }
  std::size_t cx, cy;
  if (total == 0) {
    cx = static_cast<std::size_t>(std::round(static_cast<real>(m.w) / 2));
    cy = static_cast<std::size_t>(std::round(static_cast<real>(m.h) / 2));
  } else {
    cx = static_cast<std::size_t>(std::round(sx / total));
    cy = static_cast<std::size_t>(std::round(sy / total));
  }
  const real area = static_cast<real>(m.h * m.w);
  const real w1 = static_cast<real>(cx * cy) / area;
  const real w2 = static_cast<real>((m.w - cx) * cy) / area;
  const real w3 = static_cast<real>(cx * (m.h - cy)) / area;
  const real w4 = 1 - w1 - w2 - w3;
  return w1 * region_ssim(m, 0, cy, 0, cx) + w2 * region_ssim(m, 0, cy, cx, m.w) +
         w3 * region_ssim(m, cy, m.h, 0, cx) + w4 * region_ssim(m, cy, m.h, cx, m.w);
}

} // namespace

real mae(const Tensor &s, const Tensor &g) {
  const MapView m = view(s, g);
  real acc = 0;
  for (std::size_t i = 0; i < m.size(); ++i)
    acc += std::abs(m.s[i] - m.g[i]);
  return acc / static_cast<real>(m.size());
}

FMeasure f_measure(const Tensor &s, const Tensor &g, const MetricConstants &c) {
  const MapView m = view(s, g);
  const Sweep sw = sweep(m, c.threshold_count);
  if (sw.fg == 0)
    fail(ErrorKind::kEmptyGroundTruth, "F-measure is undefined without foreground");
  FMeasure out;
  out.curve.resize(c.threshold_count);
  for (std::size_t k = 0; k < c.threshold_count; ++k) {
    out.curve[k] = f_value(sw.tp[k], sw.pos[k], sw.fg, c.beta_squared);
    out.max = std::max(out.max, out.curve[k]);
  }
  return out;
}

real adaptive_f_measure(const Tensor &s, const Tensor &g, const MetricConstants &c) {
  const MapView m = view(s, g);
  const real t = std::min(2 * mean_of(m.s, m.size()), real{1});
  std::size_t tp = 0, pos = 0, fg = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const bool on = m.s[i] >= t, is_fg = m.g[i] > 0.5;
    pos += on;
    fg += is_fg;
    tp += on && is_fg;
  }
  if (fg == 0)
    fail(ErrorKind::kEmptyGroundTruth, "F-measure is undefined without foreground");
  return f_value(tp, pos, fg, c.beta_squared);
}

real s_measure(const Tensor &s, const Tensor &g, const MetricConstants &c) {
  const MapView m = view(s, g);
  const real y = mean_of(m.g, m.size());
  if (y == 0)
    return 1 - mean_of(m.s, m.size());
  if (y == 1)
    return mean_of(m.s, m.size());
  const real q = c.alpha * s_object(m) + (1 - c.alpha) * s_region(m);
  return std::clamp(q, real{0}, real{1});
}

EMeasure e_measure(const Tensor &s, const Tensor &g, const MetricConstants &c) {
  const MapView m = view(s, g);
  const Sweep sw = sweep(m, c.threshold_count);
  EMeasure out;
  out.curve.resize(c.threshold_count);
  for (std::size_t k = 0; k < c.threshold_count; ++k)
    out.curve[k] = e_value(sw.tp[k], sw.pos[k], sw.fg, sw.n);
  out.mean = mean_of(out.curve.data(), out.curve.size());
  return out;
}

FrameScores score_frame(const Tensor &s, const Tensor &g, const MetricConstants &c) {
  FrameScores out;
  out.mae = mae(s, g);
  out.s_alpha = s_measure(s, g, c);
  EMeasure e = e_measure(s, g, c);
  out.e_phi = e.mean;
  out.e_curve = std::move(e.curve);
  try {
    FMeasure f = f_measure(s, g, c);
    out.max_f = f.max;
    out.f_curve = std::move(f.curve);
  } catch (const Error &err) {
    if (err.kind() != ErrorKind::kEmptyGroundTruth)
      throw;
    out.f_defined = false;
  }
  return out;
}

void MetricsAccumulator::add(const std::string &video, const FrameScores &scores) {
  auto it = std::find_if(videos_.begin(), videos_.end(),
                         [&](const Sums &s) { return s.name == video; });
  if (it == videos_.end()) {
    videos_.push_back({video});
    it = videos_.end() - 1;
  }
  for (Sums *s : {&*it, &overall_}) {
    ++s->frames;
    s->mae += scores.mae;
    s->s_alpha += scores.s_alpha;
    s->e_phi += scores.e_phi;
    if (scores.f_defined) {
      ++s->f_frames;
      s->max_f += scores.max_f;
    }
  }
  if (e_sum_.empty()) {
    e_sum_.assign(constants_.threshold_count, 0);
    f_sum_.assign(constants_.threshold_count, 0);
  }
  for (std::size_t k = 0; k < scores.e_curve.size() && k < e_sum_.size(); ++k)
    e_sum_[k] += scores.e_curve[k];
  if (scores.f_defined) {
    ++f_curve_frames_;
    for (std::size_t k = 0; k < scores.f_curve.size() && k < f_sum_.size(); ++k)
      f_sum_[k] += scores.f_curve[k];
  }
}

SummaryScores MetricsAccumulator::summarize(const Sums &s) {
  SummaryScores out;
  out.name = s.name;
  out.frames = s.frames;
  out.f_frames = s.f_frames;
  if (s.frames) {
    const real n = static_cast<real>(s.frames);
    out.mae = s.mae / n;
    out.s_alpha = s.s_alpha / n;
    out.e_phi = s.e_phi / n;
  }
  if (s.f_frames)
    out.max_f = s.max_f / static_cast<real>(s.f_frames);
  return out;
}

MetricsReport MetricsAccumulator::finish() const {
  MetricsReport r;
  r.constants = constants_;
  for (const auto &v : videos_)
    r.videos.push_back(summarize(v));
  r.overall = summarize(overall_);
  r.e_curve = e_sum_;
  r.f_curve = f_sum_;
  for (auto &v : r.e_curve)
    v /= std::max<real>(1, static_cast<real>(overall_.frames));
  for (auto &v : r.f_curve)
    v /= std::max<real>(1, static_cast<real>(f_curve_frames_));
  return r;
}

std::string format_report_table(const MetricsReport &report) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-24s %7s %8s %8s %8s %8s\n", "video", "frames",
                "MAE", "maxF", "S", "E");
  os << line;
  auto row = [&](const SummaryScores &s) {
    std::snprintf(line, sizeof line, "%-24s %7zu %8.4f %8.4f %8.4f %8.4f\n",
                  s.name.c_str(), s.frames, s.mae, s.max_f, s.s_alpha, s.e_phi);
    os << line;
  };
  for (const auto &v : report.videos)
    row(v);
  row(report.overall);
  return os.str();
}

std::string format_report_keyvalues(const MetricsReport &report) {
  std::ostringstream os;
  os << "constants.beta_squared = " << format_real(report.constants.beta_squared) << '\n'
     << "constants.alpha = " << format_real(report.constants.alpha) << '\n'
     << "constants.threshold_count = " << report.constants.threshold_count << '\n'
     << "constants.f_convention = mean of per-frame max over thresholds\n"
     << "constants.e_convention = mean over thresholds\n";
  auto block = [&](const std::string &prefix, const SummaryScores &s) {
    os << prefix << ".frames = " << s.frames << '\n'
       << prefix << ".f_frames = " << s.f_frames << '\n'
       << prefix << ".mae = " << format_real(s.mae) << '\n'
       << prefix << ".max_f = " << format_real(s.max_f) << '\n'
       << prefix << ".s_alpha = " << format_real(s.s_alpha) << '\n'
       << prefix << ".e_phi = " << format_real(s.e_phi) << '\n';
  };
  block("overall", report.overall);
  for (const auto &v : report.videos)
    block("video." + v.name, v);
  auto curve = [&](const char *key, const std::vector<real> &c) {
    os << key << " = ";
    for (std::size_t k = 0; k < c.size(); ++k)
      os << (k ? "," : "") << format_real(c[k]);
    os << '\n';
  };
  curve("curve.f", report.f_curve);
  curve("curve.e", report.e_curve);
  return os.str();
}

} // namespace atf
