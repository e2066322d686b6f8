// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cblas.h>

#include "atf/tensor.hpp"

namespace atf::detail {

/// C (m x n) = alpha * op(A) * op(B) + beta * C, row-major.
inline void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
                 std::size_t k, real alpha, const real *a, const real *b,
                 real beta, real *c) {
  if (m == 0 || n == 0)
    return;
  const auto lda = static_cast<blasint>(trans_a ? m : k);
  const auto ldb = static_cast<blasint>(trans_b ? k : n);
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, static_cast<blasint>(m),
              static_cast<blasint>(n), static_cast<blasint>(k), alpha, a, lda,
              b, ldb, beta, c, static_cast<blasint>(n));
}

} // namespace atf::detail

namespace atf::detail {

/// Single-precision variant, same conventions.
inline void sgemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
                  std::size_t k, float alpha, const float *a, const float *b,
                  float beta, float *c) {
  if (m == 0 || n == 0)
    return;
  const auto lda = static_cast<blasint>(trans_a ? m : k);
  const auto ldb = static_cast<blasint>(trans_b ? k : n);
  cblas_sgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, static_cast<blasint>(m),
              static_cast<blasint>(n), static_cast<blasint>(k), alpha, a, lda,
              b, ldb, beta, c, static_cast<blasint>(n));
}

} // namespace atf::detail
