#include "starseg/kernels.hpp"

namespace starseg::kernels {

namespace {

inline void gemm_row(const double* a, const double* b, double* c_row, int i,
                     int k, int n, bool accumulate) {
    if (!accumulate)
        for (int j = 0; j < n; ++j) c_row[j] = 0.0;
    const double* a_row = a + std::size_t(i) * k;
    for (int p = 0; p < k; ++p) {
        const double av = a_row[p];
        const double* b_row = b + std::size_t(p) * n;
        for (int j = 0; j < n; ++j) c_row[j] += av * b_row[j];
    }
}

inline void gemm_tn_row(const double* a, const double* b, double* c_row, int i,
                        int m, int k, int n) {
    for (int p = 0; p < k; ++p) {
        const double av = a[std::size_t(p) * m + i];
        const double* b_row = b + std::size_t(p) * n;
        for (int j = 0; j < n; ++j) c_row[j] += av * b_row[j];
    }
}

inline void gemm_nt_row(const double* a, const double* b, double* c_row, int i,
                        int k, int n, bool accumulate) {
    const double* a_row = a + std::size_t(i) * k;
    for (int j = 0; j < n; ++j) {
        const double* b_row = b + std::size_t(j) * k;
        double acc = 0.0;
        for (int p = 0; p < k; ++p) acc += a_row[p] * b_row[p];
        if (accumulate)
            c_row[j] += acc;
        else
            c_row[j] = acc;
    }
}

}  // namespace

void gemm_serial(const double* a, const double* b, double* c, int m, int k,
                 int n, bool accumulate) {
    for (int i = 0; i < m; ++i)
        gemm_row(a, b, c + std::size_t(i) * n, i, k, n, accumulate);
}

void gemm_omp(const double* a, const double* b, double* c, int m, int k, int n,
              bool accumulate) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i)
        gemm_row(a, b, c + std::size_t(i) * n, i, k, n, accumulate);
}

void gemm_tn_serial(const double* a, const double* b, double* c, int m, int k,
                    int n) {
    for (int i = 0; i < m; ++i)
        gemm_tn_row(a, b, c + std::size_t(i) * n, i, m, k, n);
}

void gemm_tn_omp(const double* a, const double* b, double* c, int m, int k,
                 int n) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i)
        gemm_tn_row(a, b, c + std::size_t(i) * n, i, m, k, n);
}

void gemm_nt_serial(const double* a, const double* b, double* c, int m, int k,
                    int n, bool accumulate) {
    for (int i = 0; i < m; ++i)
        gemm_nt_row(a, b, c + std::size_t(i) * n, i, k, n, accumulate);
}

void gemm_nt_omp(const double* a, const double* b, double* c, int m, int k,
                 int n, bool accumulate) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i)
        gemm_nt_row(a, b, c + std::size_t(i) * n, i, k, n, accumulate);
}

void gemm(const double* a, const double* b, double* c, int m, int k, int n,
          bool accumulate) {
#ifdef _OPENMP
    gemm_omp(a, b, c, m, k, n, accumulate);
#else
    gemm_serial(a, b, c, m, k, n, accumulate);
#endif
}

void gemm_tn(const double* a, const double* b, double* c, int m, int k, int n) {
#ifdef _OPENMP
    gemm_tn_omp(a, b, c, m, k, n);
#else
    gemm_tn_serial(a, b, c, m, k, n);
#endif
}

void gemm_nt(const double* a, const double* b, double* c, int m, int k, int n,
             bool accumulate) {
#ifdef _OPENMP
    gemm_nt_omp(a, b, c, m, k, n, accumulate);
#else
    gemm_nt_serial(a, b, c, m, k, n, accumulate);
#endif
}

}  // namespace starseg::kernels
