// Benchmarks the OpenMP kernels against their serial reference
// implementations on the shapes the training loop actually uses.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "starseg/geometry.hpp"
#include "starseg/kernels.hpp"

using namespace starseg;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warm-up
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) fn();
    const auto end = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(end - start).count() / reps;
}

void bench_gemm(int m, int k, int n, int reps) {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::vector<double> a(std::size_t(m) * k), b(std::size_t(k) * n),
        c(std::size_t(m) * n);
    for (double& v : a) v = uni(rng);
    for (double& v : b) v = uni(rng);

    const double flops = 2.0 * m * k * n;
    const double serial_ms = time_ms(
        [&] { kernels::gemm_serial(a.data(), b.data(), c.data(), m, k, n); }, reps);
    const double omp_ms = time_ms(
        [&] { kernels::gemm_omp(a.data(), b.data(), c.data(), m, k, n); }, reps);

    std::printf("gemm %4dx%4dx%4d  serial %8.3f ms (%6.2f GF/s)  omp %8.3f ms "
                "(%6.2f GF/s)  speedup %.2fx\n",
                m, k, n, serial_ms, flops / serial_ms * 1e-6, omp_ms,
                flops / omp_ms * 1e-6, serial_ms / omp_ms);
}

void bench_polar(int size, int reps) {
    GrayImage img(size, size);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            img.at(x, y) = 0.5 + 0.5 * std::sin(0.1 * x) * std::cos(0.13 * y);
    const double c = (size - 1) / 2.0;
    const double ms = time_ms(
        [&] { serialize(img, c, c, 400, 400, size / 2.0, 0.0); }, reps);
    std::printf("polar serialize %dx%d -> 400x400: %.3f ms\n", size, size, ms);
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP enabled, max threads = %d\n", omp_get_max_threads());
#else
    std::printf("OpenMP not enabled in this build\n");
#endif
    // level-0/1/2 input projections at desk scale (T x input_dim x 4*hidden)
    bench_gemm(5, 1536, 256, 50);
    bench_gemm(8, 960, 256, 50);
    bench_gemm(10, 768, 256, 50);
    // gradient accumulation shape
    bench_gemm(1536, 5, 256, 20);
    // full-resolution 400x400 polar grid band projection
    bench_gemm(25, 12800, 256, 5);
    bench_polar(512, 20);
    return 0;
}
