#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <vector>

#include "starseg/kernels.hpp"

using namespace starseg;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = uni(rng);
    return v;
}

// plain triple-loop oracle
std::vector<double> gemm_oracle(const std::vector<double>& a,
                                const std::vector<double>& b, int m, int k,
                                int n) {
    std::vector<double> c(std::size_t(m) * n, 0.0);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
            c[i * n + j] = acc;
        }
    return c;
}

}  // namespace

TEST_CASE("gemm matches a plain triple-loop oracle") {
    const int m = 7, k = 13, n = 9;
    auto a = random_vec(m * k, 1);
    auto b = random_vec(k * n, 2);
    auto expected = gemm_oracle(a, b, m, k, n);

    std::vector<double> c(m * n, 0.0);
    kernels::gemm_serial(a.data(), b.data(), c.data(), m, k, n);
    for (std::size_t i = 0; i < c.size(); ++i)
        CHECK(c[i] == doctest::Approx(expected[i]).epsilon(1e-12));
}

TEST_CASE("omp kernels are bit-identical to the serial reference") {
    const int m = 33, k = 41, n = 29;
    auto a = random_vec(m * k, 3);
    auto b = random_vec(k * n, 4);

    std::vector<double> cs(m * n), co(m * n);
    kernels::gemm_serial(a.data(), b.data(), cs.data(), m, k, n);
    kernels::gemm_omp(a.data(), b.data(), co.data(), m, k, n);
    CHECK(cs == co);

    auto at = random_vec(k * m, 5);
    std::vector<double> ts(m * n, 0.0), to(m * n, 0.0);
    kernels::gemm_tn_serial(at.data(), b.data(), ts.data(), m, k, n);
    kernels::gemm_tn_omp(at.data(), b.data(), to.data(), m, k, n);
    CHECK(ts == to);

    auto bt = random_vec(std::size_t(n) * k, 6);
    std::vector<double> ns(m * n), no(m * n);
    kernels::gemm_nt_serial(a.data(), bt.data(), ns.data(), m, k, n);
    kernels::gemm_nt_omp(a.data(), bt.data(), no.data(), m, k, n);
    CHECK(ns == no);
}

TEST_CASE("transposed variants agree with explicit transposition") {
    const int m = 6, k = 11, n = 8;
    auto a = random_vec(std::size_t(k) * m, 7);  // stored k x m
    auto b = random_vec(std::size_t(k) * n, 8);

    // transpose a into m x k and use plain gemm
    std::vector<double> at(std::size_t(m) * k);
    for (int p = 0; p < k; ++p)
        for (int i = 0; i < m; ++i) at[i * k + p] = a[p * m + i];
    auto expected = gemm_oracle(at, b, m, k, n);

    std::vector<double> c(std::size_t(m) * n, 0.0);
    kernels::gemm_tn(a.data(), b.data(), c.data(), m, k, n);
    for (std::size_t i = 0; i < c.size(); ++i)
        CHECK(c[i] == doctest::Approx(expected[i]).epsilon(1e-12));

    auto bt = random_vec(std::size_t(n) * k, 9);  // stored n x k
    std::vector<double> btt(std::size_t(k) * n);
    for (int j = 0; j < n; ++j)
        for (int p = 0; p < k; ++p) btt[p * n + j] = bt[j * k + p];
    auto a2 = random_vec(std::size_t(m) * k, 10);
    auto expected2 = gemm_oracle(a2, btt, m, k, n);
    std::vector<double> c2(std::size_t(m) * n);
    kernels::gemm_nt(a2.data(), bt.data(), c2.data(), m, k, n);
    for (std::size_t i = 0; i < c2.size(); ++i)
        CHECK(c2[i] == doctest::Approx(expected2[i]).epsilon(1e-12));
}

TEST_CASE("accumulate flag adds instead of overwriting") {
    const int m = 3, k = 4, n = 5;
    auto a = random_vec(m * k, 11);
    auto b = random_vec(k * n, 12);
    auto base = gemm_oracle(a, b, m, k, n);

    std::vector<double> c = base;
    kernels::gemm(a.data(), b.data(), c.data(), m, k, n, true);
    for (std::size_t i = 0; i < c.size(); ++i)
        CHECK(c[i] == doctest::Approx(2.0 * base[i]).epsilon(1e-12));
}
