// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "atf/autograd.hpp"
#include "atf/rng.hpp"
#include "atf/tensor.hpp"

namespace atf::test {

Tensor random_tensor(Shape shape, Rng &rng, real lo = -1, real hi = 1);
Tensor random_mask(Shape shape, Rng &rng, real p = 0.5);

struct GradCheck {
  real max_rel_error = 0; ///< worst tensor
  std::string worst;      ///< label of that tensor
  std::size_t checked = 0;
};

struct GradCheckOptions {
  real step = 1e-6;
  /// Entries probed per tensor; 0 probes every entry.
  std::size_t entries_per_tensor = 0;
  std::uint64_t seed = 1;
};

/// Compares backward() of `loss` against central differences for every var in
/// `wrt` (each must require a gradient). Relative error is measured per
/// tensor over the probed entries: |a - n|_2 / max(|a|_2 + |n|_2, 1e-12).
GradCheck gradcheck(const std::function<Var()> &loss, std::vector<Var> wrt,
                    std::vector<std::string> labels = {}, const GradCheckOptions &options = {});

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string &tag);
  ~TempDir();
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;
  const std::filesystem::path &path() const { return path_; }
  std::filesystem::path operator/(const std::string &p) const { return path_ / p; }

 private:
  std::filesystem::path path_;
};

} // namespace atf::test
