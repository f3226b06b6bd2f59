#include "hcodec/error.hpp"
#include "hcodec/quantizer.hpp"

#include "support/oracles.hpp"
#include "support/synth.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace hcodec;

namespace {

RvqStack toy_stack() {
    RvqStack s;
    Codebook a(2, 1);
    a.entries() = {-1.0f, 1.0f};
    Codebook b(2, 1);
    b.entries() = {-0.5f, 0.5f};
    s.layers = {a, b};
    return s;
}

FeatureMatrix column(std::initializer_list<double> values) {
    FeatureMatrix f(values.size(), 1, Rational{1, 1}, FeatureKind::SemanticExternal);
    std::copy(values.begin(), values.end(), f.data().begin());
    return f;
}

// Lloyd iterations with exhaustive assignment, started from given centroids.
std::vector<std::vector<double>> lloyd_oracle(const FeatureMatrix & f, std::vector<std::vector<double>> c, int iters) {
    for (int it = 0; it < iters; ++it) {
        std::vector<std::vector<double>> sum(c.size(), std::vector<double>(f.dims(), 0.0));
        std::vector<double> n(c.size(), 0.0);
        for (std::size_t t = 0; t < f.frames(); ++t) {
            std::size_t best = 0;
            double bd = 1e300;
            for (std::size_t k = 0; k < c.size(); ++k) {
                double d = 0.0;
                for (std::size_t j = 0; j < f.dims(); ++j) {
                    d += (f.at(t, j) - c[k][j]) * (f.at(t, j) - c[k][j]);
                }
                if (d < bd) {
                    bd = d;
                    best = k;
                }
            }
            n[best] += 1.0;
            for (std::size_t j = 0; j < f.dims(); ++j) {
                sum[best][j] += f.at(t, j);
            }
        }
        for (std::size_t k = 0; k < c.size(); ++k) {
            if (n[k] > 0) {
                for (std::size_t j = 0; j < f.dims(); ++j) {
                    c[k][j] = sum[k][j] / n[k];
                }
            }
        }
    }
    return c;
}

} // namespace

TEST(Rvq, HandTracedToyExample) {
    const RvqStack s = toy_stack();
    const CodeGrid g = rvq_encode(s, column({0.4}));
    EXPECT_EQ(g.at(0, 0), 1u);
    EXPECT_EQ(g.at(1, 0), 0u);
    const FeatureMatrix y = rvq_decode(s, g);
    EXPECT_NEAR(y.at(0, 0), 0.5, 1e-12);
    EXPECT_NEAR(0.4 - y.at(0, 0), -0.1, 1e-12);
}

TEST(Rvq, ExactCentroidHasZeroResidual) {
    RvqStack s = toy_stack();
    s.layers.resize(1);
    const auto e = rvq_residual_energies(s, column({1.0}));
    EXPECT_EQ(e[0][1], 0.0);
    EXPECT_EQ(rvq_decode(s, rvq_encode(s, column({1.0}))).at(0, 0), 1.0);
}

TEST(Rvq, TiesGoToLowestIndex) {
    RvqStack s;
    Codebook a(4, 2);
    a.entries() = {1, 1, 0, 0, 0, 0, 1, 1};
    s.layers = {a};
    FeatureMatrix f(1, 2, Rational{1, 1}, FeatureKind::SemanticExternal);
    EXPECT_EQ(rvq_encode(s, f).at(0, 0), 1u);
    f.at(0, 0) = f.at(0, 1) = 0.5;  // equidistant from all four
    EXPECT_EQ(rvq_encode(s, f).at(0, 0), 0u);
}

TEST(Rvq, EncodeMatchesExhaustiveSearch) {
    const FeatureMatrix train = test::gaussian_features(400, 4, 7);
    RvqTrainOptions opts;
    opts.num_layers = 3;
    opts.codebook_size = 16;
    opts.seed = 3;
    const RvqStack s = train_rvq(train, opts);
    const FeatureMatrix probe = test::gaussian_features(500, 4, 8);
    const CodeGrid g = rvq_encode(s, probe);
    for (std::size_t t = 0; t < probe.frames(); ++t) {
        std::vector<double> r(probe.row(t).begin(), probe.row(t).end());
        for (std::size_t l = 0; l < 3; ++l) {
            const std::size_t want = oracle::nearest(s.layers[l].entries(), 4, r);
            ASSERT_EQ(g.at(l, t), want) << "frame " << t << " layer " << l;
            for (std::size_t j = 0; j < 4; ++j) {
                r[j] -= s.layers[l].entries()[want * 4 + j];
            }
        }
    }
}

TEST(Rvq, SingleCentroidIsDataMean) {
    const FeatureMatrix f = test::gaussian_features(300, 3, 11);
    RvqTrainOptions opts;
    opts.num_layers = 1;
    opts.codebook_size = 1;
    const RvqStack s = train_rvq(f, opts);
    for (std::size_t j = 0; j < 3; ++j) {
        double mean = 0.0;
        for (std::size_t t = 0; t < 300; ++t) {
            mean += f.at(t, j);
        }
        mean /= 300.0;
        EXPECT_NEAR(s.layers[0].entries()[j], mean, 1e-6);
    }
}

TEST(Rvq, SeparatedClustersRecoverMeansLikeLloydOracle) {
    const double truth[4][2] = {{-5, -5}, {-5, 5}, {5, -5}, {5, 5}};
    Rng rng(21);
    FeatureMatrix f(200, 2, Rational{1, 1}, FeatureKind::SemanticExternal);
    for (std::size_t t = 0; t < 200; ++t) {
        const auto c = t % 4;
        f.at(t, 0) = truth[c][0] + 0.05 * rng.normal();
        f.at(t, 1) = truth[c][1] + 0.05 * rng.normal();
    }
    RvqTrainOptions opts;
    opts.num_layers = 1;
    opts.codebook_size = 4;
    opts.seed = 5;
    opts.zero_code_in_first_layer = false;
    const RvqStack s = train_rvq(f, opts);
    std::vector<std::vector<double>> start;
    for (std::size_t k = 0; k < 4; ++k) {
        const auto e = s.layers[0].entry(k);
        start.push_back({e[0] + 0.3, e[1] - 0.3});
    }
    const auto ref = lloyd_oracle(f, start, 20);
    for (std::size_t k = 0; k < 4; ++k) {
        const auto e = s.layers[0].entry(k);
        double best = 1e9;
        for (const auto & t : truth) {
            best = std::min(best, std::hypot(e[0] - t[0], e[1] - t[1]));
        }
        EXPECT_LT(best, 0.05);
        EXPECT_NEAR(e[0], ref[k][0], 1e-5);
        EXPECT_NEAR(e[1], ref[k][1], 1e-5);
    }
}

TEST(Rvq, PerFrameResidualNonIncreasingOverSeeds) {
    RvqTrainOptions opts;
    opts.num_layers = 6;
    opts.codebook_size = 16;
    opts.iters = 10;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        opts.seed = seed;
        const FeatureMatrix f = test::clustered_features(200, 8, 5, seed);
        const RvqStack s = train_rvq(f, opts);
        const FeatureMatrix probe = test::gaussian_features(100, 8, seed + 1000, 3.0);
        for (const auto & row : rvq_residual_energies(s, probe)) {
            for (std::size_t l = 1; l < row.size(); ++l) {
                ASSERT_LE(row[l], row[l - 1] + 1e-9) << "seed " << seed;
            }
        }
    }
}

TEST(Rvq, TrainingReportIsMonotoneAndUsageSumsToFrames) {
    RvqTrainOptions opts;
    opts.num_layers = 4;
    opts.codebook_size = 32;
    opts.seed = 9;
    RvqTrainReport rep;
    const FeatureMatrix f = test::clustered_features(500, 6, 12, 4);
    const RvqStack s = train_rvq(f, opts, Stream::Semantic, &rep);
    ASSERT_EQ(rep.residual_energy.size(), 5u);
    for (std::size_t l = 1; l < 5; ++l) {
        EXPECT_LE(rep.residual_energy[l], rep.residual_energy[l - 1]);
    }
    for (const Codebook & cb : s.layers) {
        double n = 0.0;
        for (double u : cb.usage()) {
            n += u;
        }
        EXPECT_DOUBLE_EQ(n, 500.0);
        for (float v : cb.entries()) {
            EXPECT_TRUE(std::isfinite(v));
        }
    }
    EXPECT_EQ(s.stream, Stream::Semantic);
}

TEST(Rvq, EmaRefinementKeepsUsageMass) {
    RvqTrainOptions opts;
    opts.num_layers = 2;
    opts.codebook_size = 8;
    opts.ema_passes = 3;
    const FeatureMatrix f = test::clustered_features(300, 4, 6, 2);
    const RvqStack s = train_rvq(f, opts);
    for (const Codebook & cb : s.layers) {
        double n = 0.0;
        for (double u : cb.usage()) {
            n += u;
        }
        EXPECT_NEAR(n, 300.0, 1e-6);
    }
}

TEST(Rvq, DeterministicForSeedAndPrefixStable) {
    const FeatureMatrix f = test::clustered_features(400, 5, 8, 1);
    RvqTrainOptions opts;
    opts.num_layers = 4;
    opts.codebook_size = 16;
    opts.seed = 77;
    const RvqStack a = train_rvq(f, opts);
    const RvqStack b = train_rvq(f, opts);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.fingerprint(), b.fingerprint());
    opts.num_layers = 2;
    const RvqStack shorter = train_rvq(f, opts);
    EXPECT_EQ(shorter.layers[0], a.layers[0]);
    EXPECT_EQ(shorter.layers[1], a.layers[1]);
    opts.seed = 78;
    EXPECT_NE(train_rvq(f, opts).fingerprint(), shorter.fingerprint());
}

TEST(Rvq, Errors) {
    const FeatureMatrix f = test::gaussian_features(10, 3, 1);
    RvqTrainOptions opts;
    opts.codebook_size = 16;
    try {
        train_rvq(f, opts);
        FAIL();
    } catch (const Error & e) {
        EXPECT_EQ(e.code(), Errc::InsufficientData);
    }
    EXPECT_THROW(rvq_encode(RvqStack{}, f), Error);

    const RvqStack s = toy_stack();
    try {
        rvq_encode(s, f);
        FAIL();
    } catch (const Error & e) {
        EXPECT_EQ(e.code(), Errc::ShapeMismatch);
    }
    CodeGrid g(Stream::Acoustic, 2, 1);
    g.at(1, 0) = 2;
    try {
        rvq_decode(s, g);
        FAIL();
    } catch (const Error & e) {
        EXPECT_EQ(e.code(), Errc::CodeOutOfRange);
    }
}

TEST(Rvq, ZeroCentroidsDecodeToZero) {
    RvqStack s;
    Codebook a(3, 2);
    s.layers = {a, a};
    const CodeGrid g(Stream::Acoustic, 2, 4);
    const FeatureMatrix y = rvq_decode(s, g);
    for (double v : y.data()) {
        EXPECT_EQ(v, 0.0);
    }
}
