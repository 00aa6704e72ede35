#include <doctest.h>

#include <cmath>
#include <random>

#include "crossalarm/tensor.hpp"
#include "gradcheck.hpp"

using namespace crossalarm;

namespace {

Tensor random_param(Shape shape, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) x = dist(rng);
    return Tensor::param(std::move(shape), std::move(v));
}

} // namespace

TEST_CASE("matmul values") {
    Tensor eye = Tensor::from({2, 2}, {1, 0, 0, 1});
    Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4});
    Tensor c = matmul(eye, a);
    CHECK(c.data() == std::vector<double>{1, 2, 3, 4});

    Tensor row = Tensor::from({1, 2}, {1, 2});
    Tensor col = Tensor::from({2, 1}, {3, 4});
    CHECK(matmul(row, col).item() == doctest::Approx(11.0));

    CHECK_THROWS_AS(matmul(row, row), DimensionError);
}

TEST_CASE("matmul gradient vs finite differences") {
    std::mt19937_64 rng(42);
    Tensor a = random_param({5, 7}, rng);
    Tensor b = random_param({7, 3}, rng);
    // A weighted sum makes the scalar loss sensitive to every output entry.
    Tensor w = Tensor::from({3, 1}, {0.3, -1.1, 0.7});
    Tensor u = Tensor::from({1, 5}, {1.0, -0.5, 0.25, 2.0, -1.5});
    const double err = gradcheck::check({a, b}, [&]() {
        return matmul(u, matmul(matmul(a, b), w));
    });
    CHECK(err < 1e-6);
}

TEST_CASE("softmax values and stability") {
    Tensor x = Tensor::from({2}, {0, 0});
    Tensor y = softmax(x, 0);
    CHECK(y.data()[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(y.data()[1] == doctest::Approx(0.5).epsilon(1e-12));

    Tensor big = Tensor::from({2}, {1000, 0});
    Tensor yb = softmax(big, 0);
    CHECK(std::isfinite(yb.data()[0]));
    CHECK(yb.data()[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(yb.data()[1] < 1e-300);

    // rows sum to one within 1e-12, entries within [0, 1]
    std::mt19937_64 rng(7);
    Tensor r = random_param({4, 6}, rng);
    Tensor s = softmax(r, 1);
    for (std::size_t i = 0; i < 4; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < 6; ++j) {
            const double v = s.at({i, j});
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            acc += v;
        }
        CHECK(std::fabs(acc - 1.0) <= 1e-12);
    }
}

TEST_CASE("softmax gradient vs finite differences") {
    std::mt19937_64 rng(11);
    Tensor x = random_param({4}, rng);
    Tensor w = Tensor::from({4}, {0.2, -0.4, 1.3, 0.5});
    const double err = gradcheck::check({x}, [&]() {
        return mean(mul(softmax(x, 0), w));
    });
    CHECK(err < 1e-6);
}

TEST_CASE("layer_norm values") {
    Tensor gain = Tensor::from({3}, {1, 1, 1});
    Tensor bias = Tensor::from({3}, {0, 0, 0});

    // constant slice: epsilon guards the zero variance
    Tensor c = Tensor::from({3}, {5, 5, 5});
    Tensor yc = layer_norm(c, gain, bias, 0);
    for (double v : yc.data()) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));

    // population variance: [1,3] -> [-1,1]
    Tensor g2 = Tensor::from({2}, {1, 1});
    Tensor b2 = Tensor::from({2}, {0, 0});
    Tensor x = Tensor::from({2}, {1, 3});
    Tensor y = layer_norm(x, g2, b2, 0);
    CHECK(y.data()[0] == doctest::Approx(-1.0).epsilon(1e-4));
    CHECK(y.data()[1] == doctest::Approx(1.0).epsilon(1e-4));

    // per-slice mean ~ 0 with unit gain, zero bias
    std::mt19937_64 rng(5);
    Tensor r = random_param({6, 8}, rng);
    Tensor g8 = Tensor::from({8}, std::vector<double>(8, 1.0));
    Tensor b8 = Tensor::from({8}, std::vector<double>(8, 0.0));
    Tensor yr = layer_norm(r, g8, b8, 1);
    for (std::size_t i = 0; i < 6; ++i) {
        double mu = 0.0;
        for (std::size_t j = 0; j < 8; ++j) mu += yr.at({i, j});
        CHECK(std::fabs(mu / 8.0) < 1e-10);
    }
}

TEST_CASE("layer_norm gradient vs finite differences") {
    std::mt19937_64 rng(13);
    Tensor x = random_param({3, 5}, rng);
    Tensor gain = random_param({5}, rng);
    Tensor bias = random_param({5}, rng);
    Tensor w = random_param({3, 5}, rng).clone_detached();
    const double err = gradcheck::check({x, gain, bias}, [&]() {
        return mean(mul(layer_norm(x, gain, bias, 1), w));
    });
    CHECK(err < 1e-5);
}

TEST_CASE("elementwise suite values") {
    Tensor a = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor z = Tensor::zeros({2, 3});
    CHECK(add(a, z).data() == a.data());

    Tensor b = Tensor::from({2, 3}, {6, 5, 4, 3, 2, 1});
    CHECK(concat({a, b}, 1).shape() == Shape{2, 6});
    CHECK(concat({a, b}, 0).shape() == Shape{4, 3});

    CHECK(slice(a, 1, 1, 3).data() == std::vector<double>{2, 3, 5, 6});
    CHECK(transpose(a).data() == std::vector<double>{1, 4, 2, 5, 3, 6});
    CHECK(mean(a).item() == doctest::Approx(3.5));
    CHECK_THROWS_AS(add(a, Tensor::zeros({3, 2})), DimensionError);
    CHECK_THROWS_AS(concat({a, Tensor::zeros({3, 3})}, 1), DimensionError);
}

TEST_CASE("elementwise suite gradients vs finite differences") {
    std::mt19937_64 rng(17);
    Tensor a = random_param({3, 4}, rng);
    Tensor b = random_param({3, 4}, rng);
    Tensor v = random_param({4}, rng);

    CHECK(gradcheck::check({a, b}, [&]() { return mean(add(a, b)); }) < 1e-7);
    CHECK(gradcheck::check({a, b}, [&]() { return mean(sub(a, b)); }) < 1e-7);
    CHECK(gradcheck::check({a, b}, [&]() { return mean(mul(a, b)); }) < 1e-6);
    CHECK(gradcheck::check({a, v}, [&]() { return mean(add(a, v)); }) < 1e-7);
    CHECK(gradcheck::check({a}, [&]() { return mean(scale(a, -2.5)); }) < 1e-7);
    CHECK(gradcheck::check({a, b}, [&]() { return mean(mul(concat({a, b}, 0), concat({b, a}, 0))); }) < 1e-6);
    CHECK(gradcheck::check({a}, [&]() { return mean(mul(slice(a, 1, 1, 3), slice(a, 1, 0, 2))); }) < 1e-6);
    CHECK(gradcheck::check({a}, [&]() { return mean(mul(transpose(a), transpose(a))); }) < 1e-6);
    CHECK(gradcheck::check({a}, [&]() { return mean(mul(reshape(a, {4, 3}), reshape(a, {4, 3}))); }) < 1e-6);
    CHECK(gradcheck::check({a}, [&]() { return mean(gelu(a)); }) < 1e-5);
    // keep relu inputs away from the kink
    Tensor far = Tensor::param({4}, {1.5, -2.0, 0.75, -0.6});
    CHECK(gradcheck::check({far}, [&]() { return mean(relu(far)); }) < 1e-7);
}

TEST_CASE("structural op gradients") {
    std::mt19937_64 rng(23);
    Tensor x = random_param({8, 3}, rng);
    CHECK(gradcheck::check({x}, [&]() {
        Tensor s = segment_series(x, 4);
        return mean(mul(s, s));
    }) < 1e-6);

    Tensor z = random_param({5, 2, 4}, rng);
    CHECK(gradcheck::check({z}, [&]() {
        Tensor p = pair_concat(z);
        return mean(mul(p, p));
    }) < 1e-6);

    Tensor q = random_param({6, 5}, rng);
    CHECK(gradcheck::check({q}, [&]() {
        Tensor a = assemble_segments(q, 2, 3, 5);
        return mean(mul(a, a));
    }) < 1e-6);
}

TEST_CASE("backward accumulates on repeated calls and demands a scalar") {
    Tensor a = Tensor::param({2}, {1.0, 2.0});
    Tape tape;
    Tape::Scope scope(tape);
    Tensor loss = mean(mul(a, a));
    tape.backward(loss);
    const std::vector<double> g1 = a.grad();
    tape.backward(loss);
    CHECK(a.grad()[0] == doctest::Approx(2 * g1[0]));
    CHECK(a.grad()[1] == doctest::Approx(2 * g1[1]));

    Tensor not_scalar = mul(a, a);
    CHECK_THROWS_AS(tape.backward(not_scalar), UsageError);
}

TEST_CASE("ops outside a tape scope retain no graph") {
    Tensor a = Tensor::param({2}, {1.0, 2.0});
    Tensor out = mul(a, a);
    CHECK_FALSE(out.requires_grad());
    Tape tape;
    CHECK_THROWS_AS(tape.backward(mean(out)), UsageError);
    CHECK(tape.size() == 0);
}

TEST_CASE("forward pass is bit-deterministic") {
    std::mt19937_64 rng(31);
    Tensor a = random_param({12, 9}, rng);
    Tensor b = random_param({9, 7}, rng);
    Tensor r1 = softmax(matmul(a, b), 1);
    Tensor r2 = softmax(matmul(a, b), 1);
    CHECK(r1.data() == r2.data());
}

TEST_CASE("debug mode rejects non-finite values") {
    const bool was = debug_checks();
    set_debug_checks(true);
    Tensor a = Tensor::from({1}, {1e308});
    CHECK_THROWS_AS(add(a, a), NumericalError);
    set_debug_checks(was);
}
