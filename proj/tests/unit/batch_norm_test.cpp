#include <gtest/gtest.h>

#include <cmath>

#include "fcdcast/batch_norm.hpp"
#include "fcdcast/errors.hpp"
#include "support.hpp"

namespace fcd::nn {
namespace {

using testing::draw_real;
using testing::random_tensor;

struct Moments {
    double mean;
    double std;
};

Moments column_moments(const Tensor& y, std::size_t f, std::size_t features) {
    const std::size_t rows = y.size() / features;
    double mean = 0.0;
    for (std::size_t r = 0; r < rows; ++r) mean += y[r * features + f];
    mean /= static_cast<double>(rows);
    double var = 0.0;
    for (std::size_t r = 0; r < rows; ++r) var += (y[r * features + f] - mean) * (y[r * features + f] - mean);
    return {mean, std::sqrt(var / static_cast<double>(rows))};
}

TEST(BatchNorm, StandardizesEachFeature) {
    Rng rng = substream(1, "bn-std");
    for (int trial = 0; trial < 20; ++trial) {
        BatchNorm bn(6);
        Tensor x = random_tensor({50, 6}, rng, -3.0, 5.0);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] *= 1.0 + static_cast<double>(i % 6);
        const Tensor y = bn.forward(x, Mode::train);
        for (std::size_t f = 0; f < 6; ++f) {
            const auto m = column_moments(y, f, 6);
            EXPECT_NEAR(m.mean, 0.0, 1e-10);
            EXPECT_NEAR(m.std * m.std, 1.0, 1e-6);
        }
    }
}

TEST(BatchNorm, AffineScaleAndShift) {
    Rng rng = substream(2, "bn-affine");
    for (int trial = 0; trial < 20; ++trial) {
        BatchNorm bn(4);
        for (std::size_t f = 0; f < 4; ++f) {
            bn.gamma()[f] = trial == 0 ? 2.0 : draw_real(rng, 0.2, 3.0);
            bn.beta()[f] = trial == 0 ? 3.0 : draw_real(rng, -2.0, 2.0);
        }
        const Tensor y = bn.forward(random_tensor({50, 4}, rng, -10.0, 10.0), Mode::train);
        for (std::size_t f = 0; f < 4; ++f) {
            const auto m = column_moments(y, f, 4);
            EXPECT_NEAR(m.mean, bn.beta()[f], 1e-10);
            EXPECT_NEAR(m.std, bn.gamma()[f], 1e-6 * bn.gamma()[f]);
        }
    }
}

TEST(BatchNorm, CumulativeRunningAverage) {
    Rng rng = substream(3, "bn-running");
    BatchNorm bn(2);
    std::vector<double> means;
    std::vector<double> vars;
    for (int e = 0; e < 5; ++e) {
        const Tensor x = random_tensor({10, 2}, rng, -1.0 + e, 2.0 + e);
        const auto m = column_moments(x, 1, 2);
        means.push_back(m.mean);
        vars.push_back(m.std * m.std);
        bn.forward(x, Mode::train);
    }
    double mean = 0.0;
    double var = 0.0;
    for (int e = 0; e < 5; ++e) {
        mean += means[e] / 5.0;
        var += vars[e] / 5.0;
    }
    EXPECT_EQ(bn.epochs(), 5u);
    EXPECT_NEAR(bn.running_mean()[1], mean, 1e-12);
    EXPECT_NEAR(bn.running_var()[1], var, 1e-12);
    EXPECT_NEAR(bn.inference_variance(1), var * 10.0 / 9.0, 1e-12);
}

TEST(BatchNorm, InferenceUsesCorrectedRunningStats) {
    Rng rng = substream(4, "bn-infer");
    BatchNorm bn(3);
    const Tensor batch = random_tensor({50, 3}, rng, 0.0, 4.0);
    bn.forward(batch, Mode::train);
    const Tensor probe = random_tensor({7, 3}, rng);
    const Tensor y = bn.forward(probe, Mode::infer);
    for (std::size_t f = 0; f < 3; ++f) {
        const auto m = column_moments(batch, f, 3);
        const double var = m.std * m.std * 50.0 / 49.0;
        for (std::size_t r = 0; r < 7; ++r) {
            EXPECT_NEAR(y[r * 3 + f], (probe[r * 3 + f] - m.mean) / std::sqrt(var + 1e-8), 1e-12);
        }
    }
    // Inference leaves the running statistics alone.
    EXPECT_EQ(bn.epochs(), 1u);
}

TEST(BatchNorm, EmaAlternative) {
    BatchNormOptions opts;
    opts.running = RunningStats::ema;
    opts.momentum = 0.25;
    BatchNorm bn(1, opts);
    const Tensor x({4, 1}, std::vector<double>{1, 2, 3, 6});
    bn.forward(x, Mode::train);
    EXPECT_NEAR(bn.running_mean()[0], 0.75 * 0.0 + 0.25 * 3.0, 1e-15);
    EXPECT_NEAR(bn.running_var()[0], 0.75 * 1.0 + 0.25 * 3.5, 1e-15);
}

TEST(BatchNorm, FrozenRunningStats) {
    Rng rng = substream(5, "bn-frozen");
    BatchNorm bn(2);
    bn.set_update_running(false);
    bn.forward(random_tensor({8, 2}, rng), Mode::train);
    EXPECT_EQ(bn.epochs(), 0u);
    EXPECT_EQ(bn.running_mean()[0], 0.0);
    EXPECT_EQ(bn.running_var()[0], 1.0);
}

TEST(BatchNorm, RejectsTinyBatchesInTraining) {
    BatchNorm bn(3);
    EXPECT_THROW(bn.forward(Tensor({1, 3}), Mode::train), ValidationError);
    EXPECT_NO_THROW(bn.forward(Tensor({1, 3}), Mode::infer));
    EXPECT_THROW(bn.forward(Tensor({4, 2}), Mode::train), StructuralError);
}

TEST(BatchNorm, ChannelwiseForImages) {
    Rng rng = substream(6, "bn-image");
    BatchNorm bn(3);
    const Tensor x = random_tensor({4, 3, 5, 5}, rng, -2.0, 7.0);
    const Tensor y = bn.forward(x, Mode::train);
    for (std::size_t c = 0; c < 3; ++c) {
        double mean = 0.0;
        double sq = 0.0;
        for (std::size_t b = 0; b < 4; ++b) {
            for (std::size_t i = 0; i < 25; ++i) {
                const double v = y[(b * 3 + c) * 25 + i];
                mean += v;
                sq += v * v;
            }
        }
        mean /= 100.0;
        EXPECT_NEAR(mean, 0.0, 1e-10);
        EXPECT_NEAR(sq / 100.0 - mean * mean, 1.0, 1e-6);
    }
}

TEST(BatchNorm, SequencesPoolBatchAndTime) {
    Rng rng = substream(7, "bn-seq");
    BatchNorm bn(2);
    const Tensor x = random_tensor({3, 4, 2}, rng, -5.0, 5.0);
    const Tensor y = bn.forward(x, Mode::train);
    for (std::size_t f = 0; f < 2; ++f) {
        const auto m = column_moments(y, f, 2);
        EXPECT_NEAR(m.mean, 0.0, 1e-10);
        EXPECT_NEAR(m.std, 1.0, 1e-6);
    }
    EXPECT_DOUBLE_EQ(bn.inference_variance(0), bn.running_var()[0] * 12.0 / 11.0);
}

TEST(BatchNorm, ScaleAndShiftAreNotWeights) {
    BatchNorm bn(3);
    for (const auto& p : bn.parameters()) EXPECT_FALSE(p.is_weight);
}

}  // namespace
}  // namespace fcd::nn
