#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "emu/errors.hpp"
#include "emu/netcore.hpp"

using namespace emu;

TEST_SUITE("netcore") {

TEST_CASE("conv2d_valid output shape law, exhaustive up to 8") {
    for (int r = 1; r <= 8; ++r) {
        for (int c = 1; c <= r; ++c) {
            const Grid2D input(r, r, 1.0);
            const Grid2D kernel(c, c, 1.0);
            const Grid2D out = conv2d_valid(input, kernel, 0.0);
            CHECK(out.rows() == r - c + 1);
            CHECK(out.cols() == r - c + 1);
        }
    }
}

TEST_CASE("conv2d_valid kernel larger than input is a shape error") {
    CHECK_THROWS_AS(conv2d_valid(Grid2D(2, 2, 0.0), Grid2D(3, 3, 0.0), 0.0), ShapeError);
}

TEST_CASE("conv2d_valid on all-ones input and kernel sums the window") {
    const Grid2D out = conv2d_valid(Grid2D(3, 3, 1.0), Grid2D(2, 2, 1.0), 0.0);
    for (double v : out.values()) CHECK(v == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("conv2d_valid with zero kernel returns the bias everywhere") {
    const Grid2D input{{1.0, 2.0, 3.0}, {4.0, 5.0, 6.0}, {7.0, 8.0, 9.0}};
    const Grid2D out = conv2d_valid(input, Grid2D(2, 2, 0.0), 0.0);
    for (double v : out.values()) CHECK(v == 0.0);
    const Grid2D biased = conv2d_valid(input, Grid2D(2, 2, 0.0), 1.25);
    for (double v : biased.values()) CHECK(v == 1.25);
}

TEST_CASE("conv2d_valid is linear in the input") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto random_grid = [&](int n) {
        Grid2D g(n, n);
        for (double& v : g.values()) v = u(rng);
        return g;
    };
    for (int trial = 0; trial < 20; ++trial) {
        const Grid2D x = random_grid(4);
        const Grid2D y = random_grid(4);
        const Grid2D k = random_grid(2);
        const double a = u(rng), b = u(rng);

        Grid2D combo(4, 4);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                combo.at(i, j) = a * x.at(i, j) + b * y.at(i, j);

        const Grid2D lhs = conv2d_valid(combo, k, 0.0);
        const Grid2D cx = conv2d_valid(x, k, 0.0);
        const Grid2D cy = conv2d_valid(y, k, 0.0);
        for (int i = 0; i < lhs.rows(); ++i)
            for (int j = 0; j < lhs.cols(); ++j)
                CHECK(lhs.at(i, j) ==
                      doctest::Approx(a * cx.at(i, j) + b * cy.at(i, j)).epsilon(1e-12));
    }
}

TEST_CASE("sigmoid values") {
    CHECK(activate(Activation::sigmoid, 0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(activate(Activation::sigmoid, 4.0) == doctest::Approx(0.9820138).epsilon(1e-6));
}

TEST_CASE("sigmoid stays in (0,1) and derivative matches y*(1-y)") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    for (int i = 0; i < 100; ++i) {
        const double x = u(rng);
        const double y = activate(Activation::sigmoid, x);
        CHECK(y > 0.0);
        CHECK(y < 1.0);
        CHECK(activate_derivative(Activation::sigmoid, x) ==
              doctest::Approx(y * (1.0 - y)).epsilon(1e-12));
    }
}

TEST_CASE("every activation derivative matches central differences") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    const double eps = 1e-5;
    for (Activation f : {Activation::sigmoid, Activation::tanh, Activation::relu,
                         Activation::linear}) {
        for (int i = 0; i < 100; ++i) {
            double x = u(rng);
            if (f == Activation::relu && std::abs(x) <= 1e-3) x += 0.5;  // avoid the kink
            const double numeric =
                (activate(f, x + eps) - activate(f, x - eps)) / (2.0 * eps);
            const double analytic = activate_derivative(f, x);
            if (std::abs(numeric) > 1e-12)
                CHECK(analytic == doctest::Approx(numeric).epsilon(1e-6));
            else
                CHECK(std::abs(analytic - numeric) < 1e-9);
        }
    }
}

TEST_CASE("relu derivative at the kink is 0") {
    CHECK(activate_derivative(Activation::relu, 0.0) == 0.0);
}

TEST_CASE("linear activation is the identity on grids") {
    const Grid2D map{{-1.5, 2.0}, {0.0, 3.25}};
    CHECK(apply_activation(map, Activation::linear) == map);
}

TEST_CASE("average and max pooling of a 2x2 map") {
    const Grid2D map{{1.0, 2.0}, {3.0, 4.0}};
    const Grid2D avg = pool(map, PoolSpec{2, PoolMode::average, 0.0});
    CHECK(avg.rows() == 1);
    CHECK(avg.cols() == 1);
    CHECK(avg.at(0, 0) == doctest::Approx(2.5).epsilon(1e-15));
    const Grid2D mx = pool(map, PoolSpec{2, PoolMode::max, 0.0});
    CHECK(mx.at(0, 0) == 4.0);
}

TEST_CASE("pooling a constant map returns the constant, plus bias") {
    const Grid2D map(4, 4, 3.7);
    CHECK(pool(map, PoolSpec{2, PoolMode::average, 0.0}).at(1, 1) ==
          doctest::Approx(3.7).epsilon(1e-15));
    CHECK(pool(map, PoolSpec{2, PoolMode::average, 0.5}).at(0, 0) ==
          doctest::Approx(4.2).epsilon(1e-15));
}

TEST_CASE("average pooling preserves the global mean") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int n : {2, 4, 6, 8}) {
        Grid2D map(n, n);
        for (double& v : map.values()) v = u(rng);
        const Grid2D pooled = pool(map, PoolSpec{2, PoolMode::average, 0.0});
        CHECK(grid_mean(pooled) == doctest::Approx(grid_mean(map)).epsilon(1e-12));
    }
}

TEST_CASE("non-tiling pool window is a shape error") {
    CHECK_THROWS_AS(pool(Grid2D(3, 3, 0.0), PoolSpec{2, PoolMode::average, 0.0}),
                    ShapeError);
}

TEST_CASE("dense_forward") {
    const std::vector<double> weights{-0.1831, 2.0049, -0.2069};

    SUBCASE("dot product against the bundled reference weights") {
        const std::vector<double> z{1.0, 0.0, 0.0};
        CHECK(dense_forward(z, weights, -0.2678, Activation::linear) ==
              doctest::Approx(-0.4509).epsilon(1e-12));
    }
    SUBCASE("zero input passes the bias through a linear transfer") {
        const std::vector<double> z{0.0, 0.0, 0.0};
        CHECK(dense_forward(z, weights, 0.77, Activation::linear) == 0.77);
    }
    SUBCASE("zero weights and bias under sigmoid give 0.5") {
        const std::vector<double> z{0.4, -1.0, 2.0};
        const std::vector<double> zero{0.0, 0.0, 0.0};
        CHECK(dense_forward(z, zero, 0.0, Activation::sigmoid) ==
              doctest::Approx(0.5).epsilon(1e-15));
    }
    SUBCASE("length mismatch is a shape error") {
        const std::vector<double> z{1.0, 2.0};
        CHECK_THROWS_AS(dense_forward(z, weights, 0.0, Activation::linear), ShapeError);
    }
}

TEST_CASE("finite_diff_gradient") {
    SUBCASE("constant loss has a zero gradient") {
        const std::vector<double> p{1.0, -2.0, 3.0};
        const auto g = finite_diff_gradient([](std::span<const double>) { return 42.0; }, p);
        for (double v : g) CHECK(v == 0.0);
    }
    SUBCASE("derivative of p^2 at 3 is 6") {
        const std::vector<double> p{3.0};
        const auto g = finite_diff_gradient(
            [](std::span<const double> x) { return x[0] * x[0]; }, p);
        CHECK(g[0] == doctest::Approx(6.0).epsilon(1e-8));
    }
    SUBCASE("matches analytic gradients of a quadratic form") {
        const std::vector<double> p{0.5, -1.5, 2.5};
        const auto loss = [](std::span<const double> x) {
            return 2.0 * x[0] * x[0] + 3.0 * x[1] * x[1] - x[2] * x[2] + x[0] * x[1];
        };
        const auto g = finite_diff_gradient(loss, p);
        CHECK(g[0] == doctest::Approx(4.0 * p[0] + p[1]).epsilon(1e-10));
        CHECK(g[1] == doctest::Approx(6.0 * p[1] + p[0]).epsilon(1e-10));
        CHECK(g[2] == doctest::Approx(-2.0 * p[2]).epsilon(1e-10));
    }
    SUBCASE("non-finite loss is a numeric error") {
        const std::vector<double> p{1.0};
        CHECK_THROWS_AS(
            finite_diff_gradient(
                [](std::span<const double> x) { return 1.0 / (x[0] - x[0]); }, p),
            NumericError);
    }
}

}  // TEST_SUITE
