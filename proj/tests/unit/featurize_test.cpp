#include <gtest/gtest.h>

#include <cmath>

#include "fcdcast/errors.hpp"
#include "fcdcast/featurize.hpp"
#include "support.hpp"

namespace fcd::features {
namespace {

using data::SpeedPanel;
using testing::constant_panel;
using testing::make_panel;

// Encodes position so that any index slip changes the value.
double code(std::size_t edge, std::size_t slot) { return static_cast<double>(edge) * 100000.0 + static_cast<double>(slot); }

// Independent enumeration of the full input in the documented order.
std::vector<double> brute_full(const SpeedPanel& p, const FullInputSpec& s, std::size_t edge, std::size_t slot) {
    std::vector<double> out;
    const long t = static_cast<long>(slot);
    const long D = static_cast<long>(p.slots_per_day());
    for (std::size_t l = 0; l < s.n0; ++l) {
        for (long b = 1; b <= static_cast<long>(s.bf); ++b) out.push_back(p.value((edge + l) % p.n_edges(), t - b));
    }
    for (long delta = 1; delta <= static_cast<long>(s.df); ++delta) {
        for (std::size_t l = 0; l < s.n0; ++l) {
            for (long q = -static_cast<long>(s.p1f); q <= static_cast<long>(s.p2f); ++q) {
                out.push_back(p.value((edge + l) % p.n_edges(), t - delta * D + q));
            }
        }
    }
    return out;
}

std::vector<double> brute_reduced(const SpeedPanel& p, const ReducedInputSpec& s, std::size_t edge, std::size_t slot) {
    std::vector<double> out;
    const long t = static_cast<long>(slot);
    const long D = static_cast<long>(p.slots_per_day());
    const long M = static_cast<long>(s.m);
    for (long b = 1; b <= static_cast<long>(s.br); ++b) out.push_back(p.value(edge, t - b));
    for (long delta = 1; delta <= static_cast<long>(s.dr); ++delta) {
        for (long q = -static_cast<long>(s.p1r); q <= static_cast<long>(s.p2r); ++q) {
            double sum = 0.0;
            for (long i = 0; i < M; ++i) sum += p.value(edge, t - delta * D + M * q + i);
            out.push_back(sum / static_cast<double>(M));
        }
    }
    return out;
}

TEST(FeatureSizes, Defaults) {
    FullInputSpec full;
    ReducedInputSpec reduced;
    EXPECT_EQ(full.input_size(), 8192u);
    EXPECT_EQ(full.output_size(), 640u);
    EXPECT_EQ(reduced.input_size(), 32u);
    EXPECT_EQ(reduced.output_size(), 20u);
}

TEST(BuildFullSample, DefaultShapes) {
    const auto panel = constant_panel(32, 9, 0.7);
    const auto s = build_full_sample(panel, {}, 0, 8 * 480 + 100);
    ASSERT_TRUE(s);
    EXPECT_EQ(s->input.size(), 8192u);
    EXPECT_EQ(s->target.size(), 640u);
    EXPECT_EQ(s->target_edges, 32u);
    EXPECT_EQ(s->horizon, 20u);
}

TEST(BuildFullSample, ConstantPanel) {
    const auto panel = constant_panel(32, 9, 0.37);
    const auto s = build_full_sample(panel, {}, 5, 7 * 480 + 300);
    ASSERT_TRUE(s);
    for (double v : s->input) EXPECT_EQ(v, 0.37);
    for (double v : s->target) EXPECT_EQ(v, 0.37);
}

TEST(BuildFullSample, PastDayIndexing) {
    const auto panel = make_panel(32, 9, [](std::size_t, std::size_t s) { return static_cast<double>(s % 480); });
    const FullInputSpec spec;
    const std::size_t t = 8 * 480 + 250;
    const auto s = build_full_sample(panel, spec, 0, t);
    ASSERT_TRUE(s);
    // Block for delta = 1 starts after the current-day block; l = 0, p = 0.
    const std::size_t idx = spec.n0 * spec.bf + 0 * spec.window() + spec.p1f;
    EXPECT_EQ(s->input[idx], panel.value(0, t - 480));
    EXPECT_EQ(s->input[0], panel.value(0, t - 1));
}

TEST(BuildFullSample, MatchesBruteForceOnRandomSpecs) {
    Rng rng = substream(1, "full-specs");
    for (int trial = 0; trial < 40; ++trial) {
        FullInputSpec spec{testing::draw(rng, 1, 5), testing::draw(rng, 1, 6), testing::draw(rng, 1, 3),
                           testing::draw(rng, 0, 4), testing::draw(rng, 0, 4), testing::draw(rng, 1, 5)};
        const std::size_t spd = 24;
        const std::size_t edges = testing::draw(rng, 1, 7);
        const auto panel = make_panel(edges, spec.df + 2, code, spd);
        const std::size_t edge = testing::draw(rng, 0, edges - 1);
        const std::size_t slot = spec.df * spd + spec.p1f + testing::draw(rng, 0, spd - spec.hf - 1);
        const auto s = build_full_sample(panel, spec, edge, slot);
        ASSERT_TRUE(s) << trial;
        const auto expected = brute_full(panel, spec, edge, slot);
        EXPECT_EQ(s->input.size(), spec.n0 * (spec.bf + (spec.p1f + spec.p2f + 1) * spec.df));
        EXPECT_EQ(s->input, expected) << trial;
        for (std::size_t l = 0; l < spec.n0; ++l) {
            for (std::size_t h = 0; h < spec.hf; ++h) {
                EXPECT_EQ(s->target[l * spec.hf + h], code((edge + l) % edges, slot + h));
            }
        }
    }
}

TEST(BuildFullSample, OutOfRangeIsUnavailable) {
    const auto panel = constant_panel(32, 9, 1.0);
    EXPECT_FALSE(build_full_sample(panel, {}, 0, 7 * 480 + 14));
    EXPECT_TRUE(build_full_sample(panel, {}, 0, 7 * 480 + 15));
    EXPECT_FALSE(build_full_sample(panel, {}, 0, 9 * 480 - 19));
    EXPECT_TRUE(build_full_sample(panel, {}, 0, 9 * 480 - 20));
}

TEST(BuildReducedSample, DefaultShapesAndConstant) {
    const auto panel = constant_panel(1, 9, 0.55);
    const auto s = build_reduced_sample(panel, {}, 0, 8 * 480 + 10);
    ASSERT_TRUE(s);
    EXPECT_EQ(s->input.size(), 32u);
    EXPECT_EQ(s->target.size(), 20u);
    for (double v : s->input) EXPECT_DOUBLE_EQ(v, 0.55);
}

TEST(BuildReducedSample, WindowAverage) {
    // Slots T - D + 0..4 hold 1, 2, 3, 4, 5: the p = 0 average of day 1.
    const std::size_t t = 8 * 480 + 200;
    const auto panel = make_panel(1, 9, [&](std::size_t, std::size_t s) {
        const long k = static_cast<long>(s) - static_cast<long>(t - 480);
        return k >= 0 && k < 5 ? static_cast<double>(k + 1) : 0.5;
    });
    const auto s = build_reduced_sample(panel, {}, 0, t);
    ASSERT_TRUE(s);
    EXPECT_DOUBLE_EQ(s->input[4], 3.0);
    EXPECT_DOUBLE_EQ(s->input[5], 0.5);
}

TEST(BuildReducedSample, MatchesBruteForceOnRandomSpecs) {
    Rng rng = substream(2, "reduced-specs");
    for (int trial = 0; trial < 60; ++trial) {
        ReducedInputSpec spec{testing::draw(rng, 1, 6), testing::draw(rng, 1, 3), testing::draw(rng, 0, 2),
                              testing::draw(rng, 0, 3), testing::draw(rng, 1, 4), testing::draw(rng, 1, 6)};
        const std::size_t spd = 40;
        const auto panel = make_panel(2, spec.dr + 2, code, spd);
        const std::size_t lo = spec.dr * spd + spec.m * spec.p1r;
        const std::size_t slot = lo + testing::draw(rng, 0, 8);
        const auto s = build_reduced_sample(panel, spec, 1, slot);
        ASSERT_TRUE(s) << trial;
        EXPECT_EQ(s->input.size(), spec.br + (spec.p1r + spec.p2r + 1) * spec.dr);
        const auto expected = brute_reduced(panel, spec, 1, slot);
        ASSERT_EQ(s->input.size(), expected.size());
        for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(s->input[i], expected[i], 1e-9) << trial;
    }
}

TEST(BuildReducedSample, AveragingIsLinear) {
    Rng rng = substream(3, "linear");
    const auto a = make_panel(1, 9, [&](std::size_t, std::size_t) { return testing::draw_real(rng, 0, 1.5); });
    const auto b = make_panel(1, 9, [&](std::size_t, std::size_t) { return testing::draw_real(rng, 0, 1.5); });
    const double alpha = 0.3;
    const double beta = 1.7;
    const auto mix = make_panel(1, 9, [&](std::size_t e, std::size_t s) { return alpha * a.value(e, s) + beta * b.value(e, s); });
    for (std::size_t t : {7u * 480 + 3, 8u * 480 + 100, 8u * 480 + 400}) {
        const auto sa = build_reduced_sample(a, {}, 0, t);
        const auto sb = build_reduced_sample(b, {}, 0, t);
        const auto sm = build_reduced_sample(mix, {}, 0, t);
        ASSERT_TRUE(sa && sb && sm);
        for (std::size_t i = 0; i < sm->input.size(); ++i) {
            EXPECT_NEAR(sm->input[i], alpha * sa->input[i] + beta * sb->input[i], 1e-12);
        }
    }
}

TEST(EnumerateSamples, ShortPanelHasNoAnchors) {
    FeatureSpec spec;
    spec.reduced.dr = 7;
    const auto panel = constant_panel(2, 7, 1.0);
    EXPECT_TRUE(enumerate_samples(panel, spec, 1).empty());
    spec.mode = InputMode::full;
    EXPECT_TRUE(enumerate_samples(constant_panel(32, 7, 1.0), spec, 1).empty());
}

TEST(EnumerateSamples, OneAnchorPerEligibleDay) {
    FeatureSpec spec;
    const auto panel = constant_panel(1, 9, 1.0);
    const auto anchors = enumerate_samples(panel, spec, 480);
    std::size_t expected = 0;
    for (std::size_t k = 0; k * 480 < panel.n_slots(); ++k) {
        const long t = static_cast<long>(k * 480);
        const bool fits = t - 7 * 480 >= 0 && t - 4 >= 0 && t + 19 < static_cast<long>(panel.n_slots());
        expected += fits ? 1 : 0;
    }
    EXPECT_EQ(anchors.size(), expected);
    EXPECT_EQ(anchors.size(), 2u);
    EXPECT_EQ(anchors[0].slot, 7u * 480);
    EXPECT_EQ(anchors[1].slot, 8u * 480);
}

TEST(EnumerateSamples, NightMaskIsRespected) {
    FeatureSpec spec;
    const auto panel = data::mask_night_hours(constant_panel(2, 9, 0.9));
    const auto anchors = enumerate_samples(panel, spec, 1);
    ASSERT_FALSE(anchors.empty());
    const auto night = [](long s) {
        const long tod = s % 480;
        return tod >= 460 || tod < 100;
    };
    for (const auto& a : anchors) {
        const long t = static_cast<long>(a.slot);
        for (long s = t - 4; s < t + 20; ++s) ASSERT_FALSE(night(s)) << t;
        for (long d = 1; d <= 7; ++d) {
            for (long s = t - d * 480; s < t - d * 480 + 20; ++s) ASSERT_FALSE(night(s)) << t;
        }
    }
    // Brute force: every slot that touches no night slot is enumerated.
    std::size_t expected = 0;
    for (long t = 7 * 480; t + 20 <= 9 * 480; ++t) {
        bool ok = true;
        for (long s = t - 4; s < t + 20 && ok; ++s) ok = !night(s);
        for (long d = 1; d <= 7 && ok; ++d) {
            for (long s = t - d * 480; s < t - d * 480 + 20 && ok; ++s) ok = !night(s);
        }
        expected += ok ? 1 : 0;
    }
    EXPECT_EQ(anchors.size(), 2 * expected);
}

TEST(EnumerateSamples, EdgeMajorOrderAndTargetRange) {
    FeatureSpec spec;
    const auto panel = constant_panel(3, 9, 1.0);
    const auto anchors = enumerate_samples(panel, spec, 7);
    for (std::size_t i = 1; i < anchors.size(); ++i) {
        const auto& p = anchors[i - 1];
        const auto& q = anchors[i];
        EXPECT_TRUE(p.edge < q.edge || (p.edge == q.edge && p.slot < q.slot));
    }
    const data::SlotRange last_day{8 * 480, 9 * 480};
    for (const auto& a : enumerate_samples(panel, spec, 7, last_day)) {
        EXPECT_GE(a.slot, last_day.begin);
        EXPECT_LE(a.slot + 20, last_day.end);
    }
    EXPECT_THROW(enumerate_samples(panel, spec, 0), ValidationError);
}

TEST(EnumerateSamples, PoisonedHolesNeverLeak) {
    Rng rng = substream(4, "poison");
    const auto base = make_panel(32, 9, [&](std::size_t, std::size_t) { return testing::draw_real(rng, 0.1, 1.2); });
    std::vector<std::pair<std::size_t, std::size_t>> holes;
    for (int i = 0; i < 300; ++i) holes.emplace_back(testing::draw(rng, 0, 31), testing::draw(rng, 0, 9 * 480 - 1));
    const auto panel = data::mask_night_hours(testing::with_holes(base, holes, std::nan("")));
    const auto finite = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    FeatureSpec reduced;
    const auto ra = enumerate_samples(panel, reduced, 3);
    ASSERT_FALSE(ra.empty());
    for (const auto& a : ra) {
        const auto s = build_sample(panel, reduced, a);
        ASSERT_TRUE(s);
        ASSERT_TRUE(finite(s->input) && finite(s->target));
    }
    for (const auto& a : enumerate_samples(panel, reduced, 11, std::nullopt, 20)) {
        for (const auto& step : to_lstm_sequence(panel, reduced, a, 20, Feed::teacher_forcing)) ASSERT_TRUE(finite(step));
    }
    FeatureSpec full;
    full.mode = InputMode::full;
    const auto fa = enumerate_samples(panel, full, 37);
    for (const auto& a : fa) {
        const auto s = build_sample(panel, full, a);
        ASSERT_TRUE(s);
        ASSERT_TRUE(finite(s->input) && finite(s->target));
    }
}

TEST(CnnTensor, ShapeAndLayout) {
    Rng rng = substream(5, "cnn");
    const auto panel = make_panel(32, 9, [&](std::size_t, std::size_t) { return testing::draw_real(rng, 0, 1); });
    const FullInputSpec spec;
    const auto s = build_full_sample(panel, spec, 3, 8 * 480 + 77);
    ASSERT_TRUE(s);
    const auto t = to_cnn_tensor(*s, spec);
    EXPECT_EQ(t.shape(), (nn::Shape{8, 32, 32}));
    for (std::size_t l = 0; l < 32; ++l) {
        // Newest slot (b = 1) in the last column of channel 0.
        EXPECT_EQ(t.at({0, l, 31}), s->input[l * spec.bf + 0]);
        EXPECT_EQ(t.at({0, l, 0}), s->input[l * spec.bf + 31]);
        EXPECT_EQ(t.at({3, l, 15}), panel.value((3 + l) % 32, 8 * 480 + 77 - 3 * 480));
    }
}

TEST(CnnTensor, ConstantAndShapeError) {
    const auto panel = constant_panel(32, 9, 0.25);
    const auto s = build_full_sample(panel, {}, 0, 8 * 480);
    ASSERT_TRUE(s);
    const nn::Tensor maps = to_cnn_tensor(*s, {});
    for (double v : maps.values()) EXPECT_EQ(v, 0.25);
    FullInputSpec odd;
    odd.bf = 31;
    const auto s2 = build_full_sample(panel, odd, 0, 8 * 480);
    ASSERT_TRUE(s2);
    EXPECT_THROW(to_cnn_tensor(*s2, odd), StructuralError);
}

TEST(LstmSequence, StepZeroIsTheStaticInput) {
    Rng rng = substream(6, "seq");
    const auto panel = make_panel(32, 9, [&](std::size_t, std::size_t) { return testing::draw_real(rng, 0, 1); });
    for (InputMode mode : {InputMode::reduced, InputMode::full}) {
        FeatureSpec spec;
        spec.mode = mode;
        const Anchor a{2, 8 * 480 + 30};
        const auto seq = to_lstm_sequence(panel, spec, a, 20, Feed::teacher_forcing);
        ASSERT_EQ(seq.size(), 20u);
        EXPECT_EQ(seq[0], build_sample(panel, spec, a)->input);
    }
}

TEST(LstmSequence, TeacherForcingReadsGroundTruth) {
    const auto panel = make_panel(1, 9, code);
    FeatureSpec spec;
    const Anchor a{0, 8 * 480 + 30};
    const auto seq = to_lstm_sequence(panel, spec, a, 5, Feed::teacher_forcing);
    EXPECT_EQ(seq[1][0], panel.value(0, a.slot));
    EXPECT_EQ(seq[1][1], panel.value(0, a.slot - 1));
    EXPECT_EQ(seq[4][0], panel.value(0, a.slot + 3));
    // Past-day averages shift with tau as well.
    EXPECT_DOUBLE_EQ(seq[1][4], seq[0][4] + 1.0);
}

TEST(LstmSequence, AutoregressiveReadsPredictions) {
    const auto panel = make_panel(1, 9, code);
    FeatureSpec spec;
    const Anchor a{0, 8 * 480 + 30};
    std::vector<double> predictions(20, -1.0);
    predictions[0] = 0.123;
    predictions[1] = 0.456;
    const auto seq = to_lstm_sequence(panel, spec, a, 3, Feed::autoregressive, predictions);
    EXPECT_EQ(seq[1][0], 0.123);
    EXPECT_EQ(seq[1][1], panel.value(0, a.slot - 1));
    EXPECT_EQ(seq[2][0], 0.456);
    EXPECT_EQ(seq[2][1], 0.123);
    EXPECT_THROW(to_lstm_sequence(panel, spec, a, 3, Feed::autoregressive), ValidationError);
    EXPECT_THROW(to_lstm_sequence(panel, spec, a, 0, Feed::teacher_forcing), ValidationError);
}

TEST(InputMode, ParseRoundTrip) {
    EXPECT_EQ(parse_input_mode("full"), InputMode::full);
    EXPECT_EQ(parse_input_mode(to_string(InputMode::reduced)), InputMode::reduced);
    EXPECT_THROW(parse_input_mode("partial"), ValidationError);
}

}  // namespace
}  // namespace fcd::features
