#pragma once

#include <cstddef>

// Dense row-major matmul kernels in three transpose flavours, each with a
// serial and an OpenMP variant. The parallel variants split work over output
// rows while every output element keeps the same left-to-right summation
// order as the serial code, so the two variants agree bitwise. The serial
// versions stay as the reference the tests compare against; bench_kernels
// times both.

namespace crossalarm::kernels {

// c[m x n] = a[m x k] * b[k x n]
void matmul_nn_serial(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n);
void matmul_nn_parallel(const double* a, const double* b, double* c,
                        std::size_t m, std::size_t k, std::size_t n);

// c[m x n] = a[m x k] * b[n x k]^T
void matmul_nt_serial(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n);
void matmul_nt_parallel(const double* a, const double* b, double* c,
                        std::size_t m, std::size_t k, std::size_t n);

// c[k x n] = a[m x k]^T * b[m x n]
void matmul_tn_serial(const double* a, const double* b, double* c,
                      std::size_t m, std::size_t k, std::size_t n);
void matmul_tn_parallel(const double* a, const double* b, double* c,
                        std::size_t m, std::size_t k, std::size_t n);

// Dispatching entry points: use the parallel variant when enabled and the
// problem is large enough to amortize thread startup.
void matmul_nn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n);
void matmul_nt(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n);
void matmul_tn(const double* a, const double* b, double* c,
               std::size_t m, std::size_t k, std::size_t n);

bool parallel_enabled();
void set_parallel_enabled(bool on);

// Work threshold (m*k*n) below which the dispatchers stay serial.
std::size_t parallel_grain();
void set_parallel_grain(std::size_t flops);

} // namespace crossalarm::kernels
