// SPDX-License-Identifier: Apache-2.0
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace oracle {

namespace {

constexpr double kEps = 2.220446049250313e-16;

struct Counts {
  double tp = 0, fp = 0, fn = 0, tn = 0;
};

Counts confusion(const Map &s, const Map &g, double t) {
  Counts c;
  for (std::size_t i = 0; i < s.v.size(); ++i) {
    const bool p = s.v[i] > t, q = g.v[i] > 0.5;
    if (p && q)
      c.tp += 1;
    else if (p)
      c.fp += 1;
    else if (q)
      c.fn += 1;
    else
      c.tn += 1;
  }
  return c;
}

double mean(const std::vector<double> &v) {
  double a = 0;
  for (double x : v)
    a += x;
  return v.empty() ? 0 : a / static_cast<double>(v.size());
}

double stdev(const std::vector<double> &v) {
  if (v.size() < 2)
    return 0;
  const double m = mean(v);
  double a = 0;
  for (double x : v)
    a += (x - m) * (x - m);
  return std::sqrt(a / static_cast<double>(v.size() - 1));
}

double object(const std::vector<double> &x) {
  if (x.empty())
    return 0;
  const double m = mean(x);
  return 2 * m / (m * m + 1 + stdev(x) + kEps);
}

double ssim(const std::vector<double> &x, const std::vector<double> &y) {
  if (x.empty())
    return 0;
  const double n = static_cast<double>(x.size());
  const double mx = mean(x), my = mean(y);
  double vx = 0, vy = 0, cxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    vx += (x[i] - mx) * (x[i] - mx);
    vy += (y[i] - my) * (y[i] - my);
    cxy += (x[i] - mx) * (y[i] - my);
  }
  vx /= n - 1 + kEps;
  vy /= n - 1 + kEps;
  cxy /= n - 1 + kEps;
  const double a = 4 * mx * my * cxy;
  const double b = (mx * mx + my * my) * (vx + vy);
  if (a != 0)
    return a / (b + kEps);
  if (b == 0)
    return 1;
  return 0;
}

} // namespace

double mae(const Map &s, const Map &g) {
  double a = 0;
  for (std::size_t i = 0; i < s.v.size(); ++i)
    a += std::fabs(s.v[i] - g.v[i]);
  return a / static_cast<double>(s.v.size());
}

std::vector<double> f_curve(const Map &s, const Map &g, double beta2) {
  std::vector<double> out;
  for (int k = 0; k < 256; ++k) {
    const Counts c = confusion(s, g, k / 255.0);
    const double p = c.tp + c.fp > 0 ? c.tp / (c.tp + c.fp) : 0;
    const double r = c.tp + c.fn > 0 ? c.tp / (c.tp + c.fn) : 0;
    out.push_back(p + r > 0 ? (1 + beta2) * p * r / (beta2 * p + r) : 0);
  }
  return out;
}

double max_f(const Map &s, const Map &g, double beta2) {
  const auto c = f_curve(s, g, beta2);
  return *std::max_element(c.begin(), c.end());
}

std::vector<double> e_curve(const Map &s, const Map &g) {
  const double n = static_cast<double>(s.v.size());
  double fg = 0;
  for (double x : g.v)
    fg += x > 0.5;
  std::vector<double> out;
  for (int k = 0; k < 256; ++k) {
    const double t = k / 255.0;
    std::vector<double> fm(s.v.size()), gt(s.v.size());
    for (std::size_t i = 0; i < s.v.size(); ++i) {
      fm[i] = s.v[i] > t ? 1 : 0;
      gt[i] = g.v[i] > 0.5 ? 1 : 0;
    }
    double score = 0;
    if (fg == 0) {
      for (double x : fm)
        score += 1 - x;
    } else if (fg == n) {
      for (double x : fm)
        score += x;
    } else {
      const double mf = mean(fm), mg = mean(gt);
      for (std::size_t i = 0; i < fm.size(); ++i) {
        const double a = fm[i] - mf, b = gt[i] - mg;
        const double align = 2 * a * b / (a * a + b * b + kEps);
        score += (align + 1) * (align + 1) / 4;
      }
    }
    out.push_back(score / n);
  }
  return out;
}

double mean_e(const Map &s, const Map &g) { return mean(e_curve(s, g)); }

double s_measure(const Map &s, const Map &g, double alpha) {
  const double y = [&] {
    double a = 0;
    for (double x : g.v)
      a += x;
    return a / static_cast<double>(g.v.size());
  }();
  if (y == 0) {
    double a = 0;
    for (double x : s.v)
      a += x;
    return 1 - a / static_cast<double>(s.v.size());
  }
  if (y == 1) {
    double a = 0;
    for (double x : s.v)
      a += x;
    return a / static_cast<double>(s.v.size());
  }

  std::vector<double> fg, bg;
  for (std::size_t i = 0; i < s.v.size(); ++i) {
    if (g.v[i] > 0.5)
      fg.push_back(s.v[i]);
    else
      bg.push_back(1 - s.v[i]);
  }
  const double so = y * object(fg) + (1 - y) * object(bg);

  // Centroid, 1-based, rounded half away from zero.
  double total = 0, sx = 0, sy = 0;
  for (std::size_t r = 0; r < g.h; ++r)
    for (std::size_t c = 0; c < g.w; ++c)
      if (g(r, c) > 0.5) {
        total += 1;
        sx += static_cast<double>(c + 1);
        sy += static_cast<double>(r + 1);
      }
  const auto cx = static_cast<std::size_t>(std::round(sx / total));
  const auto cy = static_cast<std::size_t>(std::round(sy / total));

  auto part = [&](std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1) {
    std::vector<double> a, b;
    for (std::size_t r = r0; r < r1; ++r)
      for (std::size_t c = c0; c < c1; ++c) {
        a.push_back(s(r, c));
        b.push_back(g(r, c));
      }
    return std::pair{ssim(a, b), static_cast<double>(a.size()) /
                                     static_cast<double>(s.v.size())};
  };
  const auto [q1, w1] = part(0, cy, 0, cx);
  const auto [q2, w2] = part(0, cy, cx, s.w);
  const auto [q3, w3] = part(cy, s.h, 0, cx);
  const auto [q4, w4] = part(cy, s.h, cx, s.w);
  const double sr = w1 * q1 + w2 * q2 + w3 * q3 + w4 * q4;

  return std::clamp(alpha * so + (1 - alpha) * sr, 0.0, 1.0);
}

std::vector<std::array<double, 3>> color_wheel() {
  const int ry = 15, yg = 6, gc = 4, cb = 11, bm = 13, mr = 6;
  std::vector<std::array<double, 3>> w;
  for (int i = 0; i < ry; ++i)
    w.push_back({255, std::floor(255.0 * i / ry), 0});
  for (int i = 0; i < yg; ++i)
    w.push_back({255 - std::floor(255.0 * i / yg), 255, 0});
  for (int i = 0; i < gc; ++i)
    w.push_back({0, 255, std::floor(255.0 * i / gc)});
  for (int i = 0; i < cb; ++i)
    w.push_back({0, 255 - std::floor(255.0 * i / cb), 255});
  for (int i = 0; i < bm; ++i)
    w.push_back({std::floor(255.0 * i / bm), 0, 255});
  for (int i = 0; i < mr; ++i)
    w.push_back({255, 0, 255 - std::floor(255.0 * i / mr)});
  for (auto &c : w)
    for (auto &x : c)
      x /= 255;
  return w;
}

std::array<double, 3> flow_color(double u, double v) {
  const auto wheel = color_wheel();
  const int n = static_cast<int>(wheel.size());
  const double rad = std::sqrt(u * u + v * v);
  const double a = std::atan2(-v, -u) / std::numbers::pi;
  const double fk = (a + 1) / 2 * (n - 1);
  const int k0 = static_cast<int>(std::floor(fk));
  const int k1 = k0 + 1 == n ? 0 : k0 + 1;
  const double f = fk - k0;
  std::array<double, 3> out{};
  for (int c = 0; c < 3; ++c) {
    double col = (1 - f) * wheel[k0][c] + f * wheel[k1][c];
    if (rad <= 1)
      col = 1 - rad * (1 - col);
    else
      col *= 0.75;
    out[c] = col;
  }
  return out;
}

void write_flo_bytes(const std::filesystem::path &path, std::uint32_t width,
                     std::uint32_t height, const std::vector<float> &uv) {
  if (uv.size() != 2ull * width * height)
    throw std::invalid_argument("write_flo_bytes: size mismatch");
  std::ofstream out(path, std::ios::binary);
  auto put32 = [&](std::uint32_t x) {
    const unsigned char b[4] = {static_cast<unsigned char>(x), static_cast<unsigned char>(x >> 8),
                                static_cast<unsigned char>(x >> 16),
                                static_cast<unsigned char>(x >> 24)};
    out.write(reinterpret_cast<const char *>(b), 4);
  };
  out.write("PIEH", 4);
  put32(width);
  put32(height);
  for (float f : uv) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put32(bits);
  }
}

} // namespace oracle
