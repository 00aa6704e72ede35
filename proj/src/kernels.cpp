#include "crossalarm/kernels.hpp"

#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace crossalarm::kernels {

namespace {

std::atomic<bool> g_parallel{true};
std::atomic<std::size_t> g_grain{16 * 1024};

// Per-row workers shared by the serial and parallel drivers. Keeping a single
// definition per flavour guarantees identical codegen and therefore identical
// floating point results.

inline void nn_row(const double* a_row, const double* b, double* c_row,
                   std::size_t k, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) c_row[j] = 0.0;
    for (std::size_t t = 0; t < k; ++t) {
        const double av = a_row[t];
        const double* b_row = b + t * n;
        for (std::size_t j = 0; j < n; ++j) c_row[j] += av * b_row[j];
    }
}

inline void nt_row(const double* a_row, const double* b, double* c_row,
                   std::size_t k, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) {
        const double* b_row = b + j * k;
        double acc = 0.0;
        for (std::size_t t = 0; t < k; ++t) acc += a_row[t] * b_row[t];
        c_row[j] = acc;
    }
}

// c row i (of k rows): c[i*n + j] = sum_t a[t*k + i] * b[t*n + j]
inline void tn_row(const double* a, const double* b, double* c_row,
                   std::size_t i, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) c_row[j] = 0.0;
    for (std::size_t t = 0; t < m; ++t) {
        const double av = a[t * k + i];
        const double* b_row = b + t * n;
        for (std::size_t j = 0; j < n; ++j) c_row[j] += av * b_row[j];
    }
}

} // namespace

void matmul_nn_serial(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) nn_row(a + i * k, b, c + i * n, k, n);
}

void matmul_nn_parallel(const double* a, const double* b, double* c,
                        std::size_t m, std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(m); ++i)
        nn_row(a + i * k, b, c + i * n, k, n);
}

void matmul_nt_serial(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) nt_row(a + i * k, b, c + i * n, k, n);
}

void matmul_nt_parallel(const double* a, const double* b, double* c,
                        std::size_t m, std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(m); ++i)
        nt_row(a + i * k, b, c + i * n, k, n);
}

void matmul_tn_serial(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < k; ++i) tn_row(a, b, c + i * n, i, m, k, n);
}

void matmul_tn_parallel(const double* a, const double* b, double* c,
                        std::size_t m, std::size_t k, std::size_t n) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(k); ++i)
        tn_row(a, b, c + i * n, static_cast<std::size_t>(i), m, k, n);
}

namespace {

inline bool go_parallel(std::size_t m, std::size_t k, std::size_t n) {
#ifdef _OPENMP
    return g_parallel.load(std::memory_order_relaxed) &&
           m * k * n >= g_grain.load(std::memory_order_relaxed) &&
           omp_get_max_threads() > 1 && !omp_in_parallel();
#else
    (void)m;
    (void)k;
    (void)n;
    return false;
#endif
}

} // namespace

void matmul_nn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n) {
    if (go_parallel(m, k, n))
        matmul_nn_parallel(a, b, c, m, k, n);
    else
        matmul_nn_serial(a, b, c, m, k, n);
}

void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n) {
    if (go_parallel(m, k, n))
        matmul_nt_parallel(a, b, c, m, k, n);
    else
        matmul_nt_serial(a, b, c, m, k, n);
}

void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n) {
    if (go_parallel(m, k, n))
        matmul_tn_parallel(a, b, c, m, k, n);
    else
        matmul_tn_serial(a, b, c, m, k, n);
}

bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }
void set_parallel_enabled(bool on) { g_parallel.store(on, std::memory_order_relaxed); }

std::size_t parallel_grain() { return g_grain.load(std::memory_order_relaxed); }
void set_parallel_grain(std::size_t flops) { g_grain.store(flops, std::memory_order_relaxed); }

} // namespace crossalarm::kernels
