#include "hcodec/error.hpp"
#include "hcodec/framerate.hpp"

#include "support/synth.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace hcodec;

namespace {

FeatureMatrix rows(std::initializer_list<std::initializer_list<double>> values) {
    const std::size_t dims = values.begin()->size();
    FeatureMatrix f(values.size(), dims, Rational{50, 1}, FeatureKind::SemanticProxy);
    std::size_t t = 0;
    for (const auto & r : values) {
        std::copy(r.begin(), r.end(), f.row(t++).begin());
    }
    return f;
}

FeatureMatrix alternating(std::size_t frames) {
    FeatureMatrix f(frames, 2, Rational{25, 1}, FeatureKind::SemanticProxy);
    for (std::size_t t = 0; t < frames; ++t) {
        f.at(t, t % 2) = 1.0;
    }
    return f;
}

} // namespace

TEST(Segmentation, HandTracedScan) {
    const std::vector<double> sims = {0.9, 0.9, 0.3, 0.7};
    const auto p = segment_from_similarities(sims, AggregationConfig{});
    EXPECT_EQ(p.durations, (std::vector<std::uint32_t>{3, 2}));
}

TEST(Segmentation, ThresholdIsStrict) {
    const std::vector<double> sims = {0.6, 0.6000001};
    const auto p = segment_from_similarities(sims, AggregationConfig{});
    EXPECT_EQ(p.durations, (std::vector<std::uint32_t>{1, 2}));
}

TEST(Segmentation, IdenticalFramesSaturateAtMaxDuration) {
    FeatureMatrix f(20, 4, Rational{25, 1}, FeatureKind::SemanticProxy);
    for (std::size_t t = 0; t < 20; ++t) {
        f.at(t, 0) = 1.0;
        f.at(t, 3) = -2.0;
    }
    EXPECT_EQ(segment_by_similarity(f, AggregationConfig{}).durations, (std::vector<std::uint32_t>{8, 8, 4}));
    // all-zero frames count as identical
    FeatureMatrix z(20, 4, Rational{25, 1}, FeatureKind::SemanticProxy);
    EXPECT_EQ(segment_by_similarity(z, AggregationConfig{}).durations, (std::vector<std::uint32_t>{8, 8, 4}));
}

TEST(Segmentation, OrthogonalAlternationNeverMerges) {
    const auto p = segment_by_similarity(alternating(30), AggregationConfig{});
    EXPECT_EQ(p.segments(), 30u);
    EXPECT_DOUBLE_EQ(effective_fps(p, Rational{25, 1}), 25.0);
}

TEST(Segmentation, ConservesFrameCountOnRandomProfiles) {
    Rng rng(1);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t t = 1 + rng.below(300);
        std::vector<double> sims(t - 1);
        for (double & s : sims) {
            s = rng.uniform(-1.0, 1.0);
        }
        AggregationConfig cfg;
        cfg.max_duration = 1 + rng.below(8);
        const auto p = segment_from_similarities(sims, cfg);
        ASSERT_EQ(p.total(), t);
        ASSERT_NO_THROW(p.validate(cfg.max_duration));
    }
}

TEST(Segmentation, Errors) {
    EXPECT_THROW(segment_by_similarity(FeatureMatrix{}, AggregationConfig{}), Error);
    AggregationConfig bad;
    bad.threshold = 1.0;
    EXPECT_THROW(bad.validate(), Error);
    bad.threshold = 0.5;
    bad.max_duration = 0;
    EXPECT_THROW(bad.validate(), Error);
}

TEST(Similarity, ZeroNormRules) {
    const std::vector<double> z = {0.0, 0.0};
    const std::vector<double> u = {1.0, 0.0};
    EXPECT_EQ(frame_similarity(z, z), 1.0);
    EXPECT_EQ(frame_similarity(z, u), 0.0);
    EXPECT_NEAR(frame_similarity(u, std::vector<double>{2.0, 0.0}), 1.0, 1e-15);
}

TEST(Aggregate, IdentityPartitionCopiesFrames) {
    const FeatureMatrix f = test::gaussian_features(12, 5, 3);
    SegmentPartition p;
    p.durations.assign(12, 1);
    EXPECT_EQ(aggregate(f, p).data(), f.data());
}

TEST(Aggregate, ConstantSegmentKeepsConstant) {
    const FeatureMatrix f = rows({{0.3, -1.2}, {0.3, -1.2}, {0.3, -1.2}});
    SegmentPartition p{{3}};
    const auto a = aggregate(f, p);
    ASSERT_EQ(a.frames(), 1u);
    EXPECT_NEAR(a.at(0, 0), 0.3, 1e-15);
    EXPECT_NEAR(a.at(0, 1), -1.2, 1e-15);
}

TEST(Aggregate, TwoFrameSoftmaxByHand) {
    const FeatureMatrix f = rows({{1.0, 2.0}, {3.0, -1.0}});
    // mean (2, 0.5); scores u.m = 3, v.m = 5.5
    const double w = std::exp(3.0) / (std::exp(3.0) + std::exp(5.5));
    const auto a = aggregate(f, SegmentPartition{{2}});
    EXPECT_NEAR(a.at(0, 0), w * 1.0 + (1 - w) * 3.0, 1e-9);
    EXPECT_NEAR(a.at(0, 1), w * 2.0 + (1 - w) * -1.0, 1e-9);
}

TEST(Aggregate, LengthMismatchThrows) {
    try {
        aggregate(test::gaussian_features(5, 2, 1), SegmentPartition{{2, 2}});
        FAIL();
    } catch (const Error & e) {
        EXPECT_EQ(e.code(), Errc::ShapeMismatch);
    }
}

TEST(Deaggregate, RepeatsAndSmooths) {
    const FeatureMatrix u = rows({{1.0, -1.0}});
    const auto r = deaggregate(u, SegmentPartition{{4}}, 0);
    ASSERT_EQ(r.frames(), 4u);
    for (std::size_t t = 0; t < 4; ++t) {
        EXPECT_EQ(r.at(t, 0), 1.0);
        EXPECT_EQ(r.at(t, 1), -1.0);
    }
    const FeatureMatrix two = rows({{0.0}, {3.0}});
    const auto s = deaggregate(two, SegmentPartition{{1, 2}}, 1);
    // repeated [0, 3, 3] then centred average, truncated at the ends
    EXPECT_NEAR(s.at(0, 0), 1.5, 1e-15);
    EXPECT_NEAR(s.at(1, 0), 2.0, 1e-15);
    EXPECT_NEAR(s.at(2, 0), 3.0, 1e-15);
    const FeatureMatrix f = test::gaussian_features(6, 3, 9);
    SegmentPartition ones;
    ones.durations.assign(6, 1);
    EXPECT_EQ(deaggregate(f, ones, 0).data(), f.data());
    EXPECT_THROW(deaggregate(f, SegmentPartition{{3, 3}}, 0), Error);
}

TEST(Deaggregate, RateOnDesignedProfileMatchesHandPartition) {
    // 4 identical, 1 orthogonal, 3 identical, then alternation over 4 frames
    FeatureMatrix f(12, 2, Rational{50, 1}, FeatureKind::SemanticProxy);
    const int axis[12] = {0, 0, 0, 0, 1, 0, 0, 0, 1, 0, 1, 0};
    for (std::size_t t = 0; t < 12; ++t) {
        f.at(t, axis[t]) = 1.0;
    }
    const auto p = segment_by_similarity(f, AggregationConfig{});
    EXPECT_EQ(p.durations, (std::vector<std::uint32_t>{4, 1, 3, 1, 1, 1, 1}));
    // 7 segments over 12 frames at 50 fps = 0.24 s
    EXPECT_NEAR(effective_fps(p, Rational{50, 1}), 7.0 / 0.24, 1e-9);
    EXPECT_EQ(deaggregate(aggregate(f, p), p).frames(), 12u);
}

TEST(DurationCode, WorkedValues) {
    EXPECT_EQ(encode_duration(5, 3, 1024, 8).value, 2053u);
    EXPECT_EQ(encode_duration(0, 1, 1024, 8).value, 0u);
    EXPECT_EQ(encode_duration(1023, 8, 1024, 8).value, 8191u);
    EXPECT_EQ(decode_duration(DurationCode{2053}, 1024, 8), (CodeWithDuration{5, 3}));
    EXPECT_EQ(decode_duration(DurationCode{0}, 1024, 8), (CodeWithDuration{0, 1}));
}

TEST(DurationCode, ExhaustiveSmallGrid) {
    for (std::uint32_t c = 0; c < 64; ++c) {
        for (std::uint32_t d = 1; d <= 8; ++d) {
            const auto v = encode_duration(c, d, 64, 8);
            ASSERT_LT(v.value, 64u * 8u);
            ASSERT_EQ(decode_duration(v, 64, 8), (CodeWithDuration{c, d}));
        }
    }
}

TEST(DurationCode, RangeErrors) {
    auto code_of = [](auto fn) {
        try {
            fn();
        } catch (const Error & e) {
            return e.code();
        }
        return Errc::IoError;
    };
    EXPECT_EQ(code_of([] { encode_duration(1024, 1, 1024, 8); }), Errc::CodeOutOfRange);
    EXPECT_EQ(code_of([] { encode_duration(0, 0, 1024, 8); }), Errc::CodeOutOfRange);
    EXPECT_EQ(code_of([] { encode_duration(0, 9, 1024, 8); }), Errc::CodeOutOfRange);
    EXPECT_EQ(code_of([] { decode_duration(DurationCode{8192}, 1024, 8); }), Errc::CodeOutOfRange);
}
