// SPDX-License-Identifier: Apache-2.0
#include "helpers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unistd.h>

namespace atf::test {

Tensor random_tensor(Shape shape, Rng &rng, real lo, real hi) {
  Tensor t(std::move(shape));
  for (auto &v : t.data())
    v = rng.uniform(lo, hi);
  return t;
}

Tensor random_mask(Shape shape, Rng &rng, real p) {
  Tensor t(std::move(shape));
  for (auto &v : t.data())
    v = rng.uniform() < p ? 1 : 0;
  return t;
}

GradCheck gradcheck(const std::function<Var()> &loss, std::vector<Var> wrt,
                    std::vector<std::string> labels, const GradCheckOptions &options) {
  for (auto &v : wrt) {
    if (!v.requires_grad())
      throw std::invalid_argument("gradcheck: input does not require a gradient");
    v.zero_grad();
  }
  backward(loss());

  GradCheck out;
  Rng rng(options.seed);
  for (std::size_t t = 0; t < wrt.size(); ++t) {
    Var &v = wrt[t];
    const Tensor analytic = v.grad().empty() ? Tensor::zeros_like(v.value()) : v.grad();
    std::vector<std::size_t> probe(v.value().size());
    std::iota(probe.begin(), probe.end(), 0);
    if (options.entries_per_tensor && probe.size() > options.entries_per_tensor) {
      for (std::size_t i = 0; i < options.entries_per_tensor; ++i)
        std::swap(probe[i], probe[i + rng.below(probe.size() - i)]);
      probe.resize(options.entries_per_tensor);
    }
    real diff2 = 0, a2 = 0, n2 = 0;
    for (std::size_t k : probe) {
      real &x = v.mutable_value()[k];
      const real saved = x;
      real plus, minus;
      {
        NoGradGuard guard;
        x = saved + options.step;
        plus = loss().value()[0];
        x = saved - options.step;
        minus = loss().value()[0];
      }
      x = saved;
      const real numeric = (plus - minus) / (2 * options.step);
      const real a = analytic[k];
      diff2 += (a - numeric) * (a - numeric);
      a2 += a * a;
      n2 += numeric * numeric;
    }
    out.checked += probe.size();
    const real rel = std::sqrt(diff2) / std::max(std::sqrt(a2) + std::sqrt(n2), 1e-12);
    if (rel >= out.max_rel_error) {
      out.max_rel_error = rel;
      out.worst = t < labels.size() ? labels[t] : "input " + std::to_string(t);
    }
  }
  return out;
}

TempDir::TempDir(const std::string &tag) {
  const auto base = std::filesystem::temp_directory_path();
  for (int i = 0;; ++i) {
    path_ = base / ("atf_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(i));
    if (std::filesystem::create_directories(path_))
      break;
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

} // namespace atf::test
