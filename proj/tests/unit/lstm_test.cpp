#include <gtest/gtest.h>

#include <cmath>

#include "fcdcast/errors.hpp"
#include "fcdcast/lstm.hpp"
#include "support.hpp"

namespace fcd::nn {
namespace {

using testing::random_tensor;

void randomize(Lstm& cell, Rng& rng, double scale = 1.0) {
    for (std::size_t g = 0; g < Lstm::kGates; ++g) {
        const auto gate = static_cast<Lstm::Gate>(g);
        cell.spatial(gate) = random_tensor({cell.in(), cell.hidden()}, rng, -scale, scale);
        cell.temporal(gate) = random_tensor({cell.hidden(), cell.hidden()}, rng, -scale, scale);
    }
}

TEST(Sigmoid, StableAtExtremes) {
    EXPECT_EQ(sigmoid(0.0), 0.5);
    EXPECT_EQ(sigmoid(-800.0), 0.0);
    EXPECT_EQ(sigmoid(800.0), 1.0);
    EXPECT_NEAR(sigmoid(2.0) + sigmoid(-2.0), 1.0, 1e-15);
}

TEST(Lstm, ZeroWeightsGiveHalfGatesAndZeroHidden) {
    Lstm cell(3, 4);
    Rng rng = substream(1, "zero");
    const Tensor y = cell.forward(random_tensor({2, 3, 3}, rng), Mode::train);
    for (double v : y.values()) EXPECT_EQ(v, 0.0);
    for (auto g : {Lstm::input_gate, Lstm::forget_gate, Lstm::output_gate}) {
        for (double v : cell.gate_cache(g).values()) EXPECT_EQ(v, 0.5);
    }
    for (double v : cell.gate_cache(Lstm::cell_gate).values()) EXPECT_EQ(v, 0.0);
    for (double v : cell.cell_cache().values()) EXPECT_EQ(v, 0.0);
}

TEST(Lstm, ZeroWeightsHalveThePreviousCell) {
    Rng rng = substream(2, "halve");
    Lstm cell(2, 3);
    randomize(cell, rng);
    const Tensor x = random_tensor({1, 1, 2}, rng);
    cell.forward(x, Mode::infer);
    const Tensor c1 = cell.cell_cache();
    cell.reset_stream();
    cell.stream(x);
    for (std::size_t g = 0; g < Lstm::kGates; ++g) {
        cell.spatial(static_cast<Lstm::Gate>(g)).fill(0.0);
        cell.temporal(static_cast<Lstm::Gate>(g)).fill(0.0);
    }
    const Tensor h2 = cell.stream(x);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(h2[j], 0.5 * std::tanh(0.5 * c1[j]), 1e-15);
}

TEST(Lstm, SingleUnitHandEvaluation) {
    Lstm cell(1, 1);
    const double wi = 0.3, wf = -0.2, wo = 0.7, wg = 1.1;
    const double ui = 0.5, uf = 0.4, uo = -0.6, ug = 0.2;
    cell.spatial(Lstm::input_gate)[0] = wi;
    cell.spatial(Lstm::forget_gate)[0] = wf;
    cell.spatial(Lstm::output_gate)[0] = wo;
    cell.spatial(Lstm::cell_gate)[0] = wg;
    cell.temporal(Lstm::input_gate)[0] = ui;
    cell.temporal(Lstm::forget_gate)[0] = uf;
    cell.temporal(Lstm::output_gate)[0] = uo;
    cell.temporal(Lstm::cell_gate)[0] = ug;
    const double x0 = 0.8, x1 = -1.5;
    const Tensor y = cell.forward(Tensor({1, 2, 1}, std::vector<double>{x0, x1}), Mode::infer);

    const auto s = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    double h = 0.0, c = 0.0;
    std::vector<double> expected;
    for (double x : {x0, x1}) {
        const double i = s(wi * x + ui * h);
        const double f = s(wf * x + uf * h);
        const double o = s(wo * x + uo * h);
        const double g = std::tanh(wg * x + ug * h);
        c = f * c + i * g;
        h = o * std::tanh(c);
        expected.push_back(h);
    }
    EXPECT_NEAR(y[0], expected[0], 1e-15);
    EXPECT_NEAR(y[1], expected[1], 1e-15);
}

TEST(Lstm, GateRanges) {
    Rng rng = substream(3, "ranges");
    Lstm cell(5, 6);
    randomize(cell, rng);
    cell.forward(random_tensor({4, 7, 5}, rng, -3.0, 3.0), Mode::train);
    for (auto g : {Lstm::input_gate, Lstm::forget_gate, Lstm::output_gate}) {
        for (double v : cell.gate_cache(g).values()) {
            EXPECT_GT(v, 0.0);
            EXPECT_LT(v, 1.0);
        }
    }
    for (double v : cell.gate_cache(Lstm::cell_gate).values()) {
        EXPECT_GT(v, -1.0);
        EXPECT_LT(v, 1.0);
    }
}

TEST(Lstm, StreamingMatchesUnrolledForward) {
    Rng rng = substream(4, "stream");
    Lstm cell(3, 4);
    randomize(cell, rng, 0.5);
    const Tensor x = random_tensor({2, 5, 3}, rng);
    const Tensor full = cell.forward(x, Mode::infer);
    cell.reset_stream();
    for (std::size_t t = 0; t < 5; ++t) {
        Tensor step({2, 1, 3});
        for (std::size_t b = 0; b < 2; ++b) {
            for (std::size_t f = 0; f < 3; ++f) step[b * 3 + f] = x[(b * 5 + t) * 3 + f];
        }
        const Tensor h = cell.stream(step);
        for (std::size_t b = 0; b < 2; ++b) {
            for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(h[b * 4 + j], full[(b * 5 + t) * 4 + j]);
        }
    }
}

TEST(Lstm, SameWeightsAtEveryStep) {
    Rng rng = substream(5, "sharing");
    Lstm cell(2, 3);
    randomize(cell, rng);
    // Parameter storage does not grow with the unroll length.
    const auto params = cell.parameters();
    EXPECT_EQ(params.size(), 8u);
    std::size_t total = 0;
    for (const auto& p : params) total += p.value->size();
    EXPECT_EQ(total, 4u * (2 * 3 + 3 * 3));
    // A prefix of a long unroll equals the short unroll.
    const Tensor x = random_tensor({1, 6, 2}, rng);
    const Tensor y6 = cell.forward(x, Mode::infer);
    Tensor x2({1, 2, 2});
    for (std::size_t i = 0; i < 4; ++i) x2[i] = x[i];
    const Tensor y2 = cell.forward(x2, Mode::infer);
    for (std::size_t i = 0; i < y2.size(); ++i) EXPECT_EQ(y2[i], y6[i]);
    // Shifting a constant input sequence by one step repeats the recursion:
    // the same map takes (h_t, x) to h_{t+1} at every tau.
    const Tensor constant({1, 3, 2}, 0.4);
    const Tensor yc = cell.forward(constant, Mode::infer);
    cell.reset_stream();
    cell.stream(Tensor({1, 1, 2}, 0.4));
    const Tensor second = cell.stream(Tensor({1, 1, 2}, 0.4));
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(second[j], yc[3 + j]);
}

TEST(Lstm, ShapeChecks) {
    Lstm cell(3, 2);
    EXPECT_EQ(cell.output_shape({7, 3}), (Shape{7, 2}));
    EXPECT_THROW(cell.forward(Tensor({1, 2, 4}), Mode::infer), StructuralError);
}

}  // namespace
}  // namespace fcd::nn
