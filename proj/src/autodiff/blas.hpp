#pragma once

namespace gliomaseg::ad {

/// Row-major C = alpha * op(A) * op(B) + beta * C, backed by CBLAS.
template <typename T>
void gemm(bool trans_a, bool trans_b, int m, int n, int k, T alpha, const T* a, int lda, const T* b, int ldb, T beta,
          T* c, int ldc);

/// Bounds BLAS worker threads; 0 leaves the library default.
void set_blas_threads(int threads);

}  // namespace gliomaseg::ad
