#include "hcodec/dual_codec.hpp"
#include "hcodec/error.hpp"
#include "hcodec/metrics.hpp"

#include "support/errors.hpp"
#include "support/synth.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace hcodec;
using hcodec::test::errc_of;

namespace {

CodecConfig small_config() {
    CodecConfig cfg;
    cfg.codebook_size = 16;
    cfg.nq_acoustic = 2;
    cfg.nq_semantic = 2;
    cfg.proxy_mels = 40;
    return cfg;
}

std::vector<Waveform> corpus(std::size_t n, double seconds, std::uint32_t sr = 16000) {
    std::vector<Waveform> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(test::speech_like(seconds, sr, 100 + i));
    }
    return out;
}

CodecTrainOptions quick(std::uint64_t seed = 1) {
    CodecTrainOptions o;
    o.seed = seed;
    o.iters = 8;
    return o;
}

FeatureMatrix alternating_external(std::size_t frames, Rational fps) {
    FeatureMatrix f(frames, 4, fps, FeatureKind::SemanticExternal);
    for (std::size_t t = 0; t < frames; ++t) {
        f.at(t, t % 2) = 1.0;
    }
    return f;
}

double mean_adjacent_similarity(const FeatureMatrix & f) {
    double s = 0.0;
    for (std::size_t t = 1; t < f.frames(); ++t) {
        s += frame_similarity(f.row(t - 1), f.row(t));
    }
    return s / static_cast<double>(f.frames() - 1);
}

} // namespace

TEST(CodecConfig, RateAndValidation) {
    CodecConfig cfg;
    EXPECT_EQ(cfg.frame_rate(), (Rational{25, 1}));
    cfg.stack_factor = 8;
    EXPECT_EQ(cfg.frame_rate(), (Rational{25, 4}));
    cfg.stack_factor = 2;
    cfg.dynamic = AggregationConfig{};
    cfg.codebook_size = 8192;
    EXPECT_EQ(errc_of([&] { cfg.validate(); }), Errc::InvalidConfig);
    cfg.codebook_size = 1024;
    EXPECT_NO_THROW(cfg.validate());
    cfg.proxy_mels = 400;
    EXPECT_EQ(errc_of([&] { cfg.validate(); }), Errc::InvalidConfig);
}

TEST(Codec, StaticTokenCountIs25PerSecond) {
    const CodecConfig cfg = small_config();
    const CodecStacks stacks = train_codec(corpus(3, 2.0), cfg, quick());
    for (double seconds : {2.0, 4.0}) {
        const auto enc = encode(test::speech_like(seconds, 16000, 7), cfg, stacks);
        EXPECT_EQ(enc.frames(), static_cast<std::size_t>(25 * seconds));
        EXPECT_EQ(enc.acoustic.layers, 2u);
        EXPECT_EQ(enc.semantic.layers, 2u);
        EXPECT_FALSE(enc.partition.has_value());
    }
}

TEST(Codec, FortyEightKilohertzStackEightGives32Frames) {
    // 249 STFT frames for a 5 s clip, padded up to whole stacks: ceil(249 / 8) = 32,
    // one more than 6.25 fps * 5 s would suggest.
    CodecConfig cfg;
    cfg.sample_rate = 48000;
    cfg.stft = StftConfig{1920, 960};
    cfg.stack_factor = 8;
    const auto feats = analyze(test::speech_like(5.0, 48000, 3), cfg);
    EXPECT_EQ(feats.stft_frames, 249u);
    EXPECT_EQ(feats.acoustic.frames(), 32u);
    EXPECT_EQ(feats.semantic.frames(), 32u);
    EXPECT_DOUBLE_EQ(feats.acoustic.fps().value(), 6.25);
}

TEST(Codec, SilenceInDynamicModeSaturatesAndDecodesToZero) {
    CodecConfig cfg = small_config();
    cfg.dynamic = AggregationConfig{};
    const CodecStacks stacks = train_codec(corpus(3, 2.0), cfg, quick());
    Waveform silence;
    silence.sample_rate = 16000;
    silence.samples.assign(16000, 0.0);
    const auto enc = encode(silence, cfg, stacks);
    // 49 STFT frames -> 25 stacked -> ceil(25 / 8) segments
    ASSERT_TRUE(enc.partition.has_value());
    EXPECT_EQ(enc.partition->durations, (std::vector<std::uint32_t>{8, 8, 8, 1}));
    EXPECT_EQ(enc.frames(), 4u);
    const Waveform y = decode(enc, cfg, stacks);
    ASSERT_EQ(y.size(), silence.size());
    for (double v : y.samples) {
        ASSERT_EQ(v, 0.0);
    }
}

TEST(Codec, DecodePreservesLengthAndRate) {
    const CodecConfig cfg = small_config();
    const CodecStacks stacks = train_codec(corpus(3, 2.0), cfg, quick());
    for (std::size_t extra : {0u, 1u, 123u, 319u, 639u}) {
        Waveform w = test::speech_like(1.0, 16000, extra);
        w.samples.resize(16000 + extra, 0.01);
        const Waveform y = decode(encode(w, cfg, stacks), cfg, stacks);
        EXPECT_EQ(y.size(), w.size());
        EXPECT_EQ(y.sample_rate, 16000u);
    }
}

TEST(Codec, MismatchedCodebooksAreRejected) {
    const CodecConfig cfg = small_config();
    const auto clips = corpus(3, 2.0);
    const CodecStacks a = train_codec(clips, cfg, quick(1));
    const CodecStacks b = train_codec(clips, cfg, quick(2));
    const auto enc = encode(clips[0], cfg, a);
    EXPECT_EQ(errc_of([&] { decode(enc, cfg, b); }), Errc::CodecMismatch);
    CodecConfig dyn = cfg;
    dyn.dynamic = AggregationConfig{};
    EXPECT_EQ(errc_of([&] { decode(enc, dyn, a); }), Errc::CodecMismatch);
    EXPECT_EQ(errc_of([&] { encode(clips[0], cfg, CodecStacks{}); }), Errc::NotTrained);

    Waveform wrong_rate = clips[0];
    wrong_rate.sample_rate = 22050;
    EXPECT_EQ(errc_of([&] { encode(wrong_rate, cfg, a); }), Errc::ShapeMismatch);
    CodecConfig deeper = cfg;
    deeper.nq_acoustic = 3;
    EXPECT_EQ(errc_of([&] { encode(clips[0], deeper, a); }), Errc::ShapeMismatch);
}

TEST(Codec, TrainingIsDeterministic) {
    const CodecConfig cfg = small_config();
    const auto clips = corpus(2, 2.0);
    CodecTrainReport rep;
    const CodecStacks a = train_codec(clips, cfg, quick(5), &rep);
    const CodecStacks b = train_codec(clips, cfg, quick(5));
    EXPECT_EQ(codec_fingerprint(cfg, a), codec_fingerprint(cfg, b));
    EXPECT_EQ(rep.frames, 100u);
    for (const auto * r : {&rep.acoustic, &rep.semantic}) {
        for (std::size_t l = 1; l < r->residual_energy.size(); ++l) {
            EXPECT_LE(r->residual_energy[l], r->residual_energy[l - 1]);
        }
    }
}

TEST(Codec, StaticAndDynamicAgreeWhenNothingMerges) {
    CodecConfig cfg = small_config();
    cfg.semantic_source = SemanticSource::External;
    const auto clips = corpus(3, 2.0);
    std::vector<FeatureMatrix> ext;
    for (std::size_t i = 0; i < clips.size(); ++i) {
        ext.push_back(alternating_external(50, cfg.frame_rate()));
    }
    CodecConfig dyn = cfg;
    dyn.dynamic = AggregationConfig{};
    const CodecStacks s_static = train_codec(clips, cfg, quick(), nullptr, &ext);
    const CodecStacks s_dynamic = train_codec(clips, dyn, quick(), nullptr, &ext);

    const auto probe = test::speech_like(2.0, 16000, 42);
    const auto feats = alternating_external(50, cfg.frame_rate());
    const auto e_static = encode(probe, cfg, s_static, &feats);
    const auto e_dynamic = encode(probe, dyn, s_dynamic, &feats);
    ASSERT_TRUE(e_dynamic.partition.has_value());
    EXPECT_EQ(e_dynamic.partition->segments(), 50u);
    EXPECT_EQ(decode(e_static, cfg, s_static).samples, decode(e_dynamic, dyn, s_dynamic).samples);
}

TEST(Codec, ExternalFeaturesMustMatchRate) {
    CodecConfig cfg = small_config();
    cfg.semantic_source = SemanticSource::External;
    const auto probe = test::speech_like(2.0, 16000, 1);
    EXPECT_EQ(errc_of([&] { analyze(probe, cfg); }), Errc::InvalidConfig);
    const auto wrong = alternating_external(50, Rational{50, 1});
    EXPECT_EQ(errc_of([&] { analyze(probe, cfg, &wrong); }), Errc::ShapeMismatch);
    const auto short_feats = alternating_external(49, cfg.frame_rate());
    EXPECT_EQ(errc_of([&] { analyze(probe, cfg, &short_feats); }), Errc::ShapeMismatch);
    const auto ok = alternating_external(50, cfg.frame_rate());
    EXPECT_EQ(analyze(probe, cfg, &ok).semantic, ok);
}

TEST(SemanticProxy, StationaryToneIsSmootherThanNoise) {
    const CodecConfig cfg = small_config();
    const auto tone = stack_frames(semantic_proxy(test::tone(440.0, 2.0, 16000), cfg), 2);
    const auto noise = stack_frames(semantic_proxy(test::white(2.0, 16000, 3), cfg), 2);
    EXPECT_GT(mean_adjacent_similarity(tone), mean_adjacent_similarity(noise) + 0.1)
        << mean_adjacent_similarity(tone) << " vs " << mean_adjacent_similarity(noise);
    EXPECT_EQ(tone.dims(), 80u);
}

TEST(Codec, StftLossFallsWithDepth) {
    CodecConfig cfg = small_config();
    cfg.stft = StftConfig{64, 32};
    cfg.proxy_mels = 24;
    cfg.codebook_size = 32;
    cfg.nq_acoustic = 8;
    const auto clips = corpus(4, 2.0);
    const CodecStacks full = train_codec(clips, cfg, quick(3));
    const auto probe = test::speech_like(2.0, 16000, 77);
    double prev = 1e300;
    for (std::size_t nq : {1u, 2u, 4u, 8u}) {
        CodecConfig c = cfg;
        c.nq_acoustic = nq;
        CodecStacks s = full;
        s.acoustic.layers.resize(nq);
        const double loss = stft_loss(probe, decode(encode(probe, c, s), c, s));
        EXPECT_LT(loss, prev) << "nq " << nq;
        prev = loss;
    }
}
