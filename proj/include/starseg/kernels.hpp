#pragma once

#include <cstddef>

namespace starseg::kernels {

// Dense row-major matrix products. The *_serial variants are the reference
// implementations; the *_omp variants parallelize over output rows with a
// per-element summation order identical to the serial code, so results are
// bit-for-bit equal.

// C (m x n) = A (m x k) * B (k x n), optionally accumulating into C.
void gemm_serial(const double* a, const double* b, double* c, int m, int k,
                 int n, bool accumulate = false);
void gemm_omp(const double* a, const double* b, double* c, int m, int k, int n,
              bool accumulate = false);

// C (m x n) += A^T * B with A stored (k x m), B (k x n).
void gemm_tn_serial(const double* a, const double* b, double* c, int m, int k,
                    int n);
void gemm_tn_omp(const double* a, const double* b, double* c, int m, int k,
                 int n);

// C (m x n) = A (m x k) * B^T with B stored (n x k), optionally accumulating.
void gemm_nt_serial(const double* a, const double* b, double* c, int m, int k,
                    int n, bool accumulate = false);
void gemm_nt_omp(const double* a, const double* b, double* c, int m, int k,
                 int n, bool accumulate = false);

// Dispatchers used by the rest of the library (OpenMP when compiled in).
void gemm(const double* a, const double* b, double* c, int m, int k, int n,
          bool accumulate = false);
void gemm_tn(const double* a, const double* b, double* c, int m, int k, int n);
void gemm_nt(const double* a, const double* b, double* c, int m, int k, int n,
             bool accumulate = false);

}  // namespace starseg::kernels
