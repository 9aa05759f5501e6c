#include <gtest/gtest.h>

#include <cmath>

#include "fcdcast/errors.hpp"
#include "fcdcast/layers.hpp"
#include "fcdcast/tensor.hpp"
#include "support.hpp"

namespace fcd::nn {
namespace {

using testing::draw;
using testing::random_tensor;

TEST(Tensor, ShapeAndAccess) {
    Tensor t({2, 3, 4}, 1.5);
    EXPECT_EQ(t.size(), 24u);
    EXPECT_EQ(t.rank(), 3u);
    t.at({1, 2, 3}) = 7.0;
    EXPECT_EQ(t[23], 7.0);
    EXPECT_EQ(shape_string(t.shape()), "[2, 3, 4]");
    EXPECT_THROW(Tensor({2, 2}, std::vector<double>(3)), StructuralError);
    EXPECT_THROW(t.reshape({5, 5}), StructuralError);
    t.reshape({6, 4});
    EXPECT_EQ(t.dim(0), 6u);
}

TEST(Tensor, MatmulHelpersAgreeWithNaiveLoops) {
    Rng rng = substream(1, "matmul");
    const std::size_t m = 3, k = 5, n = 4;
    const Tensor a = random_tensor({m, k}, rng);
    const Tensor b = random_tensor({k, n}, rng);
    Tensor c({m, n}, 9.0);
    matmul(a.values(), b.values(), c.values(), m, k, n);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t q = 0; q < k; ++q) s += a[i * k + q] * b[q * n + j];
            EXPECT_NEAR(c[i * n + j], s, 1e-14);
        }
    }
    // a^T b with a [k x m]: reuse a^T.
    const Tensor at = random_tensor({k, m}, rng);
    Tensor acc({m, n}, 1.0);
    matmul_at_b_add(at.values(), b.values(), acc.values(), m, k, n);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 1.0;
            for (std::size_t q = 0; q < k; ++q) s += at[q * m + i] * b[q * n + j];
            EXPECT_NEAR(acc[i * n + j], s, 1e-14);
        }
    }
    const Tensor bt = random_tensor({n, k}, rng);
    Tensor d({m, n});
    matmul_a_bt(a.values(), bt.values(), d.values(), m, k, n);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t q = 0; q < k; ++q) s += a[i * k + q] * bt[j * k + q];
            EXPECT_NEAR(d[i * n + j], s, 1e-14);
        }
    }
}

TEST(LeakyRelu, Values) {
    EXPECT_EQ(leaky_relu(0.0), 0.0);
    EXPECT_DOUBLE_EQ(leaky_relu(-1.0, 0.01), -0.01);
    EXPECT_EQ(leaky_relu(2.5), 2.5);
    EXPECT_EQ(leaky_relu_grad(-3.0, 0.2), 0.2);
}

TEST(LeakyRelu, GradientMatchesFiniteDifference) {
    const double h = 1e-5;
    for (double x : {2.0, -1.3, 0.7}) {
        const double numeric = (leaky_relu(x + h) - leaky_relu(x - h)) / (2 * h);
        EXPECT_LT(std::abs(numeric - leaky_relu_grad(x)) / std::abs(numeric), 1e-8);
    }
}

TEST(OutputClampFn, Regions) {
    EXPECT_EQ(output_clamp(-0.3), 0.0);
    EXPECT_EQ(output_clamp(0.42), 0.42);
    EXPECT_EQ(output_clamp(1.7), 1.0);
    EXPECT_EQ(output_clamp_grad(-0.3), 0.0);
    EXPECT_EQ(output_clamp_grad(0.0), 1.0);
    EXPECT_EQ(output_clamp_grad(1.0), 1.0);
    EXPECT_EQ(output_clamp_grad(1.7), 0.0);
}

TEST(Dense, IdentityWeightsPassThrough) {
    Dense d(3, 3);
    for (std::size_t i = 0; i < 3; ++i) d.theta().at({i, i}) = 1.0;
    const Tensor x({2, 3}, std::vector<double>{1, -2, 3, 0.5, 0.25, -7});
    EXPECT_EQ(d.forward(x, Mode::infer), x);
}

TEST(Dense, ActsOnLastAxis) {
    Rng rng = substream(2, "dense");
    Dense d(4, 2);
    d.theta() = random_tensor({4, 2}, rng);
    const Tensor x = random_tensor({3, 5, 4}, rng);
    const Tensor y = d.forward(x, Mode::infer);
    EXPECT_EQ(y.shape(), (Shape{3, 5, 2}));
    const Tensor flat = d.forward(x.reshaped({15, 4}), Mode::infer);
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_EQ(y[i], flat[i]);
    EXPECT_THROW(d.forward(random_tensor({2, 3}, rng), Mode::infer), StructuralError);
}

TEST(Dense, NoBiasAndCount) {
    Dense d(4, 3);
    const auto params = d.parameters();
    ASSERT_EQ(params.size(), 1u);
    EXPECT_EQ(params[0].value->size(), 12u);
    EXPECT_TRUE(params[0].is_weight);
    // No bias: zero input maps to zero output whatever the weights.
    Rng rng = substream(3, "bias");
    d.theta() = random_tensor({4, 3}, rng);
    const Tensor y = d.forward(Tensor({2, 4}), Mode::infer);
    for (double v : y.values()) EXPECT_EQ(v, 0.0);
}

TEST(Conv2d, OneByOneAllOnesIsIdentity) {
    Conv2d c(1, 1, 1, 1, 0);
    c.theta().fill(1.0);
    Rng rng = substream(4, "conv-id");
    const Tensor x = random_tensor({2, 1, 5, 6}, rng);
    EXPECT_EQ(c.forward(x, Mode::infer), x);
}

TEST(Conv2d, MatchesDirectSum) {
    Rng rng = substream(5, "conv-direct");
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t cin = draw(rng, 1, 3), cout = draw(rng, 1, 3), r = draw(rng, 1, 3), s = draw(rng, 1, 2);
        const std::size_t p = draw(rng, 0, 1);
        std::size_t n = draw(rng, 3, 8);
        while ((n + 2 * p - r) % s != 0) ++n;
        Conv2d c(cin, cout, r, s, p);
        c.theta() = random_tensor({cout, cin, r, r}, rng);
        const Tensor x = random_tensor({2, cin, n, n}, rng);
        const Tensor y = c.forward(x, Mode::infer);
        const std::size_t on = (n + 2 * p - r) / s + 1;
        ASSERT_EQ(y.shape(), (Shape{2, cout, on, on}));
        for (std::size_t b = 0; b < 2; ++b) {
            for (std::size_t f = 0; f < cout; ++f) {
                for (std::size_t l = 0; l < on; ++l) {
                    for (std::size_t m = 0; m < on; ++m) {
                        double sum = 0.0;
                        for (std::size_t g = 0; g < cin; ++g) {
                            for (std::size_t j = 0; j < r; ++j) {
                                for (std::size_t k = 0; k < r; ++k) {
                                    const long yy = long(s * l + j) - long(p);
                                    const long xx = long(s * m + k) - long(p);
                                    if (yy < 0 || xx < 0 || yy >= long(n) || xx >= long(n)) continue;
                                    sum += c.theta().at({f, g, j, k}) * x.at({b, g, std::size_t(yy), std::size_t(xx)});
                                }
                            }
                        }
                        EXPECT_NEAR(y.at({b, f, l, m}), sum, 1e-12);
                    }
                }
            }
        }
    }
}

TEST(Conv2d, PaperSizeRelations) {
    Conv2d c(8, 4, 3, 1, 1);
    EXPECT_EQ(c.output_shape({8, 32, 32}), (Shape{4, 32, 32}));
    MaxPool2d pool(2, 2);
    EXPECT_EQ(pool.output_shape({4, 32, 32}), (Shape{4, 16, 16}));
    EXPECT_THROW(c.output_shape({3, 32, 32}), StructuralError);
    EXPECT_THROW(MaxPool2d(2, 2).output_shape({1, 5, 5}), StructuralError);
}

TEST(WindowExtent, RandomizedRelations) {
    Rng rng = substream(6, "extent");
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t r = draw(rng, 1, 5), s = draw(rng, 1, 4), p = draw(rng, 0, 3), out = draw(rng, 1, 20);
        // Build an extent that tiles exactly: N = (out - 1) S + R - 2P.
        const long n = long(out - 1) * long(s) + long(r) - 2 * long(p);
        if (n <= 0) continue;
        EXPECT_EQ(window_output_extent(std::size_t(n), r, s, p), out);
        if (s > 1) EXPECT_THROW(window_output_extent(std::size_t(n) + 1, r, s, p), StructuralError);
    }
}

TEST(MaxPool2d, PicksWindowMaxima) {
    MaxPool2d pool(2, 2);
    const Tensor x({1, 1, 4, 4}, std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16});
    const Tensor y = pool.forward(x, Mode::infer);
    EXPECT_EQ(y.values()[0], 6.0);
    EXPECT_EQ(y.values()[1], 8.0);
    EXPECT_EQ(y.values()[2], 14.0);
    EXPECT_EQ(y.values()[3], 16.0);
    const Tensor dx = pool.backward(Tensor({1, 1, 2, 2}, 1.0));
    EXPECT_EQ(dx.at({0, 0, 1, 1}), 1.0);
    EXPECT_EQ(dx.at({0, 0, 0, 0}), 0.0);
}

TEST(MaxPool2d, OverlappingWindowsAccumulate) {
    MaxPool2d pool(2, 1);
    const Tensor x({1, 1, 3, 3}, std::vector<double>{0, 0, 0, 0, 9, 0, 0, 0, 0});
    const Tensor y = pool.forward(x, Mode::infer);
    for (double v : y.values()) EXPECT_EQ(v, 9.0);
    EXPECT_EQ(pool.backward(Tensor({1, 1, 2, 2}, 1.0)).at({0, 0, 1, 1}), 4.0);
}

TEST(Flatten, RoundTrip) {
    Flatten f;
    Rng rng = substream(7, "flatten");
    const Tensor x = random_tensor({2, 3, 2, 2}, rng);
    const Tensor y = f.forward(x, Mode::infer);
    EXPECT_EQ(y.shape(), (Shape{2, 12}));
    EXPECT_EQ(f.backward(y), x);
}

TEST(Layers, ForwardIsDeterministic) {
    Rng rng = substream(8, "det");
    Conv2d c(2, 3);
    c.theta() = random_tensor({3, 2, 3, 3}, rng);
    const Tensor x = random_tensor({2, 2, 6, 6}, rng);
    const Tensor a = c.forward(x, Mode::infer);
    const Tensor b = c.forward(x, Mode::infer);
    EXPECT_EQ(a, b);
}

}  // namespace
}  // namespace fcd::nn
