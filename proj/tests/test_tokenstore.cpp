#include "hcodec/dual_codec.hpp"
#include "hcodec/error.hpp"
#include "hcodec/rng.hpp"
#include "hcodec/tokenstore.hpp"

#include "support/errors.hpp"
#include "support/synth.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <limits>

using namespace hcodec;
using hcodec::test::errc_of;
using hcodec::test::offset_of;

namespace {

EncodedAudio random_tokens(Rng & rng) {
    EncodedAudio enc;
    const bool dynamic = rng.below(2) == 1;
    enc.codebook_size = static_cast<std::uint32_t>(1 + rng.below(2048));
    enc.max_duration = dynamic ? static_cast<std::uint32_t>(1 + rng.below(8)) : 1;
    enc.sample_rate = rng.below(2) == 1 ? 16000 : 48000;
    enc.fps = Rational::make(enc.sample_rate, 320 * (1 + rng.below(8)));
    enc.fingerprint = rng.next();
    const std::size_t frames = 1 + rng.below(200);
    enc.original_len = rng.below(1u << 30);
    enc.acoustic = CodeGrid(Stream::Acoustic, 1 + rng.below(8), frames);
    enc.semantic = CodeGrid(Stream::Semantic, 1 + rng.below(8), frames);
    if (dynamic) {
        enc.partition = SegmentPartition{};
        for (std::size_t t = 0; t < frames; ++t) {
            enc.partition->durations.push_back(static_cast<std::uint32_t>(1 + rng.below(enc.max_duration)));
        }
    }
    for (CodeGrid * g : {&enc.acoustic, &enc.semantic}) {
        for (std::size_t l = 0; l < g->layers; ++l) {
            for (std::size_t t = 0; t < frames; ++t) {
                std::uint32_t c = static_cast<std::uint32_t>(rng.below(enc.codebook_size));
                if (dynamic && l == 0) {
                    c = encode_duration(c, enc.partition->durations[t], enc.codebook_size, enc.max_duration).value;
                }
                g->at(l, t) = c;
            }
        }
    }
    return enc;
}

RvqStack random_stack(Rng & rng) {
    RvqStack s;
    s.stream = rng.below(2) == 1 ? Stream::Semantic : Stream::Acoustic;
    const std::size_t k = 1 + rng.below(32);
    const std::size_t d = 1 + rng.below(16);
    for (std::size_t l = 0, n = 1 + rng.below(6); l < n; ++l) {
        Codebook cb(k, d);
        for (float & v : cb.entries()) {
            v = static_cast<float>(rng.normal() * 10.0);
        }
        s.layers.push_back(std::move(cb));
    }
    return s;
}

FeatureMatrix random_features(Rng & rng) {
    FeatureMatrix f(1 + rng.below(100), 1 + rng.below(40), Rational::make(1 + rng.below(100), 1 + rng.below(4)),
                    FeatureKind::SemanticExternal);
    for (double & v : f.data()) {
        v = static_cast<float>(rng.normal());
    }
    return f;
}

void put_u16(std::vector<std::uint8_t> & b, std::size_t at, std::uint16_t v) {
    b[at] = static_cast<std::uint8_t>(v & 0xFF);
    b[at + 1] = static_cast<std::uint8_t>(v >> 8);
}

void put_u32(std::vector<std::uint8_t> & b, std::size_t at, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        b[at + i] = static_cast<std::uint8_t>(v >> (8 * i));
    }
}

EncodedAudio small_static() {
    EncodedAudio enc;
    enc.codebook_size = 1024;
    enc.sample_rate = 16000;
    enc.fps = Rational{25, 1};
    enc.original_len = 16000;
    enc.acoustic = CodeGrid(Stream::Acoustic, 2, 3);
    enc.semantic = CodeGrid(Stream::Semantic, 1, 3);
    enc.acoustic.codes = {1, 2, 3, 4, 5, 6};
    enc.semantic.codes = {7, 8, 9};
    return enc;
}

} // namespace

TEST(TokenFile, RandomRoundTripsAreBitExact) {
    Rng rng(500);
    for (int i = 0; i < 500; ++i) {
        const EncodedAudio enc = random_tokens(rng);
        const auto bytes = write_tokens(enc);
        const std::size_t payload = 2 * enc.frames() * (enc.acoustic.layers + enc.semantic.layers) +
                                    (enc.partition ? enc.frames() : 0);
        ASSERT_EQ(bytes.size(), kTokenHeaderSize + payload);
        const EncodedAudio back = read_tokens(bytes);
        ASSERT_EQ(back, enc);
        ASSERT_EQ(write_tokens(back), bytes);
    }
}

TEST(TokenFile, CanonicalLayout) {
    const auto b = write_tokens(small_static());
    ASSERT_EQ(b.size(), 43u + 2 * 9);
    EXPECT_EQ(std::memcmp(b.data(), "HTOK", 4), 0);
    EXPECT_EQ(b[4], 1);
    EXPECT_EQ(b[5] | b[6] << 8, 16000);  // sample rate, low half
    EXPECT_EQ(b[17] | b[18] << 8, 1024);  // K
    EXPECT_EQ(b[19], 1);                  // d_max
    EXPECT_EQ(b[20], 2);
    EXPECT_EQ(b[21], 1);
    EXPECT_EQ(b[22], 0);
    EXPECT_EQ(b[31], 3);                  // T
    EXPECT_EQ(b[43], 1);                  // first acoustic code
    EXPECT_EQ(b[43 + 12], 7);             // first semantic code
}

TEST(TokenFile, LargestDurationCodeFits) {
    EncodedAudio enc = small_static();
    enc.max_duration = 8;
    enc.partition = SegmentPartition{{8, 1, 1}};
    enc.acoustic.codes = {8191, 0, 1, 4, 5, 6};
    enc.semantic.codes = {1023 * 8 + 7, 1, 2};
    EXPECT_EQ(read_tokens(write_tokens(enc)), enc);
    enc.acoustic.at(1, 0) = 1024;
    EXPECT_EQ(errc_of([&] { write_tokens(enc); }), Errc::CodeOutOfRange);
}

TEST(TokenFile, WriterRejectsBadStreams) {
    EncodedAudio enc = small_static();
    enc.acoustic = CodeGrid(Stream::Acoustic, 2, 0);
    enc.semantic = CodeGrid(Stream::Semantic, 1, 0);
    EXPECT_EQ(errc_of([&] { write_tokens(enc); }), Errc::EmptyInput);
    enc = small_static();
    enc.max_duration = 8;
    EXPECT_EQ(errc_of([&] { write_tokens(enc); }), Errc::InvalidConfig);
}

TEST(TokenFile, CorruptionReportsOffsets) {
    const auto good = write_tokens(small_static());

    auto bad = good;
    bad[0] = 'X';
    EXPECT_EQ(errc_of([&] { read_tokens(bad); }), Errc::NotATokenFile);
    EXPECT_EQ(offset_of([&] { read_tokens(bad); }), 0u);

    bad = good;
    bad[4] = 2;
    EXPECT_EQ(offset_of([&] { read_tokens(bad); }), 4u);

    bad = good;
    put_u32(bad, 13, 0);
    EXPECT_EQ(offset_of([&] { read_tokens(bad); }), 13u);

    bad = good;
    put_u16(bad, 17, 0);
    EXPECT_EQ(offset_of([&] { read_tokens(bad); }), 17u);

    bad = good;
    bad[19] = 4;  // static stream with d_max 4
    EXPECT_EQ(offset_of([&] { read_tokens(bad); }), 19u);

    bad = good;
    bad[22] = 7;
    EXPECT_EQ(offset_of([&] { read_tokens(bad); }), 22u);

    bad = good;
    put_u32(bad, 31, 0);
    EXPECT_EQ(errc_of([&] { read_tokens(bad); }), Errc::CorruptFile);
    EXPECT_EQ(offset_of([&] { read_tokens(bad); }), 31u);

    bad = good;
    put_u16(bad, 43 + 4, 1024);
    EXPECT_EQ(errc_of([&] { read_tokens(bad); }), Errc::CodeOutOfRange);
    EXPECT_EQ(offset_of([&] { read_tokens(bad); }), 47u);

    bad = good;
    bad.pop_back();
    EXPECT_EQ(errc_of([&] { read_tokens(bad); }), Errc::CorruptFile);
    EXPECT_EQ(offset_of([&] { read_tokens(bad); }), good.size() - 1);

    bad = good;
    bad.push_back(0);
    EXPECT_EQ(offset_of([&] { read_tokens(bad); }), good.size());

    bad.assign(good.begin(), good.begin() + 20);
    EXPECT_EQ(offset_of([&] { read_tokens(bad); }), 20u);
    bad.assign(good.begin(), good.begin() + 2);
    EXPECT_EQ(errc_of([&] { read_tokens(bad); }), Errc::NotATokenFile);
}

TEST(TokenFile, DurationBytesMustAgreeWithCodes) {
    EncodedAudio enc = small_static();
    enc.max_duration = 8;
    enc.partition = SegmentPartition{{3, 1, 2}};
    // layer-0 codes carry c + K * (d - 1)
    enc.acoustic.codes = {2 + 1024 * 2, 0, 1 + 1024 * 1, 4, 5, 6};
    enc.semantic.codes = {9 + 1024 * 2, 0, 2 + 1024 * 1};
    auto b = write_tokens(enc);
    const std::size_t dur_at = 43 + 2 * 9;
    b[dur_at + 1] = 2;
    EXPECT_EQ(offset_of([&] { read_tokens(b); }), dur_at + 1);
    b[dur_at + 1] = 0;
    EXPECT_EQ(offset_of([&] { read_tokens(b); }), dur_at + 1);
}

TEST(CodebookFile, RandomRoundTripsAreBitExact) {
    Rng rng(501);
    for (int i = 0; i < 500; ++i) {
        const RvqStack s = random_stack(rng);
        const auto bytes = write_codebooks(s);
        const RvqStack back = read_codebooks(bytes);
        ASSERT_EQ(back.layers.size(), s.layers.size());
        ASSERT_EQ(back.stream, s.stream);
        for (std::size_t l = 0; l < s.layers.size(); ++l) {
            ASSERT_EQ(back.layers[l].entries(), s.layers[l].entries());
        }
        ASSERT_EQ(write_codebooks(back), bytes);
    }
}

TEST(CodebookFile, CorruptionReportsOffsets) {
    Rng rng(3);
    RvqStack s = random_stack(rng);
    const auto good = write_codebooks(s);
    auto bad = good;
    bad[5] = 9;
    EXPECT_EQ(offset_of([&] { read_codebooks(bad); }), 5u);
    bad = good;
    const float nan = std::numeric_limits<float>::quiet_NaN();
    put_u32(bad, 11 + 4 * 3, std::bit_cast<std::uint32_t>(nan));
    if (good.size() >= 11 + 4 * 4) {
        EXPECT_EQ(offset_of([&] { read_codebooks(bad); }), 11u + 12u);
    }
    bad = good;
    bad.resize(good.size() - 3);
    EXPECT_EQ(offset_of([&] { read_codebooks(bad); }), good.size() - 3);
    bad = good;
    bad[0] = 'Q';
    EXPECT_EQ(errc_of([&] { read_codebooks(bad); }), Errc::CorruptFile);
}

TEST(FeatureFile, RandomRoundTripsAreBitExact) {
    Rng rng(502);
    for (int i = 0; i < 500; ++i) {
        const FeatureMatrix f = random_features(rng);
        const auto bytes = write_features(f);
        ASSERT_EQ(bytes.size(), kFeatureHeaderSize + 4 * f.data().size());
        ASSERT_EQ(read_features(bytes), f);
    }
}

TEST(FeatureFile, NanAndTruncationReportOffsets) {
    FeatureMatrix f(2, 3, Rational{25, 1}, FeatureKind::SemanticExternal);
    auto bytes = write_features(f);
    put_u32(bytes, kFeatureHeaderSize + 4 * 4, std::bit_cast<std::uint32_t>(std::numeric_limits<float>::infinity()));
    EXPECT_EQ(offset_of([&] { read_features(bytes); }), kFeatureHeaderSize + 16);
    bytes.resize(kFeatureHeaderSize + 5);
    EXPECT_EQ(offset_of([&] { read_features(bytes); }), kFeatureHeaderSize + 5);
    f.at(0, 0) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_EQ(errc_of([&] { write_features(f); }), Errc::InvalidConfig);
}

TEST(FeatureFile, RateMustMatchCodec) {
    const auto dir = std::filesystem::temp_directory_path() / "hcodec_feature_rate";
    std::filesystem::create_directories(dir);
    CodecConfig cfg;
    cfg.semantic_source = SemanticSource::External;
    const Waveform w = test::speech_like(2.0, 16000, 1);

    FeatureMatrix at50(100, 8, Rational{50, 1}, FeatureKind::SemanticExternal);
    save_features(dir / "f50.hfea", at50);
    const FeatureMatrix loaded50 = load_features(dir / "f50.hfea");
    EXPECT_EQ(errc_of([&] { analyze(w, cfg, &loaded50); }), Errc::ShapeMismatch);

    FeatureMatrix at25(50, 8, Rational{25, 1}, FeatureKind::SemanticExternal);
    save_features(dir / "f25.hfea", at25);
    const FeatureMatrix loaded25 = load_features(dir / "f25.hfea");
    EXPECT_EQ(analyze(w, cfg, &loaded25).semantic.frames(), 50u);
    std::filesystem::remove_all(dir);
    EXPECT_EQ(errc_of([&] { load_features(dir / "missing.hfea"); }), Errc::IoError);
}
