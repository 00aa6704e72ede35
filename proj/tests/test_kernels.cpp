#include <doctest.h>

#include <random>
#include <vector>

#include "crossalarm/kernels.hpp"

using namespace crossalarm;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    std::vector<double> v(n);
    for (double& x : v) x = dist(rng);
    return v;
}

} // namespace

TEST_CASE("parallel kernels match the serial reference bitwise") {
    std::mt19937_64 rng(99);
    const std::size_t shapes[][3] = {
        {1, 1, 1}, {3, 5, 7}, {17, 9, 33}, {64, 64, 64}, {128, 31, 57},
    };
    for (const auto& s : shapes) {
        const std::size_t m = s[0], k = s[1], n = s[2];
        std::vector<double> a = random_vec(m * k, rng);
        std::vector<double> b_nn = random_vec(k * n, rng);
        std::vector<double> b_nt = random_vec(n * k, rng);
        std::vector<double> b_tn = random_vec(m * n, rng);

        std::vector<double> c1(m * n), c2(m * n);
        kernels::matmul_nn_serial(a.data(), b_nn.data(), c1.data(), m, k, n);
        kernels::matmul_nn_parallel(a.data(), b_nn.data(), c2.data(), m, k, n);
        CHECK(c1 == c2);

        kernels::matmul_nt_serial(a.data(), b_nt.data(), c1.data(), m, k, n);
        kernels::matmul_nt_parallel(a.data(), b_nt.data(), c2.data(), m, k, n);
        CHECK(c1 == c2);

        std::vector<double> d1(k * n), d2(k * n);
        kernels::matmul_tn_serial(a.data(), b_tn.data(), d1.data(), m, k, n);
        kernels::matmul_tn_parallel(a.data(), b_tn.data(), d2.data(), m, k, n);
        CHECK(d1 == d2);
    }
}

TEST_CASE("transpose flavours agree with explicit transposition") {
    std::mt19937_64 rng(3);
    const std::size_t m = 6, k = 5, n = 4;
    std::vector<double> a = random_vec(m * k, rng);
    std::vector<double> b = random_vec(k * n, rng);

    std::vector<double> nn(m * n);
    kernels::matmul_nn_serial(a.data(), b.data(), nn.data(), m, k, n);

    // nt with pre-transposed b must reproduce nn.
    std::vector<double> bt(n * k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < n; ++j) bt[j * k + i] = b[i * n + j];
    std::vector<double> nt(m * n);
    kernels::matmul_nt_serial(a.data(), bt.data(), nt.data(), m, k, n);
    for (std::size_t i = 0; i < m * n; ++i) CHECK(nt[i] == doctest::Approx(nn[i]).epsilon(1e-12));

    // tn with pre-transposed a must reproduce nn.
    std::vector<double> at(k * m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < k; ++j) at[j * m + i] = a[i * k + j];
    std::vector<double> tn(m * n);
    kernels::matmul_tn_serial(at.data(), b.data(), tn.data(), k, m, n);
    for (std::size_t i = 0; i < m * n; ++i) CHECK(tn[i] == doctest::Approx(nn[i]).epsilon(1e-12));
}

TEST_CASE("dispatcher honours the enable switch") {
    const bool was = kernels::parallel_enabled();
    kernels::set_parallel_enabled(false);
    CHECK_FALSE(kernels::parallel_enabled());
    std::mt19937_64 rng(5);
    std::vector<double> a = random_vec(80 * 80, rng), b = random_vec(80 * 80, rng);
    std::vector<double> c1(80 * 80), c2(80 * 80);
    kernels::matmul_nn(a.data(), b.data(), c1.data(), 80, 80, 80);
    kernels::set_parallel_enabled(true);
    kernels::matmul_nn(a.data(), b.data(), c2.data(), 80, 80, 80);
    CHECK(c1 == c2);
    kernels::set_parallel_enabled(was);
}
