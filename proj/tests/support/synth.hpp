#pragma once

#include "hcodec/rng.hpp"
#include "hcodec/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace hcodec::test {

inline Waveform tone(double hz, double seconds, std::uint32_t sr, double amp = 0.5, double phase = 0.0) {
    Waveform w;
    w.sample_rate = sr;
    w.samples.resize(static_cast<std::size_t>(seconds * sr));
    for (std::size_t i = 0; i < w.size(); ++i) {
        w.samples[i] = amp * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / sr + phase);
    }
    return w;
}

inline Waveform white(double seconds, std::uint32_t sr, std::uint64_t seed, double amp = 0.1) {
    Rng rng(seed);
    Waveform w;
    w.sample_rate = sr;
    w.samples.resize(static_cast<std::size_t>(seconds * sr));
    for (double & v : w.samples) {
        v = amp * rng.normal();
    }
    return w;
}

inline Waveform chirp(double f0, double f1, double seconds, std::uint32_t sr, double amp = 0.4) {
    Waveform w;
    w.sample_rate = sr;
    w.samples.resize(static_cast<std::size_t>(seconds * sr));
    const double k = (f1 - f0) / seconds;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double t = static_cast<double>(i) / sr;
        w.samples[i] = amp * std::sin(2.0 * std::numbers::pi * (f0 * t + 0.5 * k * t * t));
    }
    return w;
}

// Two-pole resonator bank driven by a glottal pulse train, with syllable-rate
// formant jumps, an amplitude envelope and short pauses. Stands in for speech.
inline Waveform speech_like(double seconds, std::uint32_t sr, std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t n = static_cast<std::size_t>(seconds * sr);
    Waveform w;
    w.sample_rate = sr;
    w.samples.assign(n, 0.0);

    const double nyq = sr / 2.0;
    const double f0_base = rng.uniform(100.0, 220.0);
    const std::size_t syllable = static_cast<std::size_t>(rng.uniform(0.15, 0.25) * sr);
    double formants[3] = {500.0, 1500.0, 2500.0};
    double y1[3] = {0, 0, 0};
    double y2[3] = {0, 0, 0};
    double phase = 0.0;
    bool voiced = true;
    for (std::size_t i = 0; i < n; ++i) {
        if (i % syllable == 0) {
            formants[0] = rng.uniform(300.0, 850.0);
            formants[1] = rng.uniform(900.0, 2300.0);
            formants[2] = std::min(rng.uniform(2400.0, 3400.0), 0.9 * nyq);
            voiced = rng.uniform01() > 0.15;
        }
        const double t = static_cast<double>(i) / sr;
        const double f0 = f0_base * (1.0 + 0.08 * std::sin(2.0 * std::numbers::pi * 3.0 * t));
        phase += f0 / sr;
        double excitation = 0.0;
        if (phase >= 1.0) {
            phase -= 1.0;
            excitation = voiced ? 1.0 : 0.0;
        }
        excitation += 0.02 * rng.normal();
        double out = 0.0;
        for (int k = 0; k < 3; ++k) {
            const double bw = 80.0 + 40.0 * k;
            const double r = std::exp(-std::numbers::pi * bw / sr);
            const double a1 = 2.0 * r * std::cos(2.0 * std::numbers::pi * formants[k] / sr);
            const double a2 = -r * r;
            const double y = excitation + a1 * y1[k] + a2 * y2[k];
            y2[k] = y1[k];
            y1[k] = y;
            out += y / (k + 1);
        }
        const double pos = static_cast<double>(i % syllable) / syllable;
        const double env = std::sin(std::numbers::pi * pos);
        w.samples[i] = out * env * (voiced ? 1.0 : 0.05);
    }
    double peak = 0.0;
    for (double v : w.samples) {
        peak = std::max(peak, std::abs(v));
    }
    if (peak > 0.0) {
        for (double & v : w.samples) {
            v *= 0.5 / peak;
        }
    }
    return w;
}

inline FeatureMatrix gaussian_features(std::size_t frames, std::size_t dims, std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    FeatureMatrix f(frames, dims, Rational{1, 1}, FeatureKind::SemanticExternal);
    for (double & v : f.data()) {
        v = scale * rng.normal();
    }
    return f;
}

// Gaussian mixture with `clusters` centres, closer to real feature clouds
// than isotropic noise.
inline FeatureMatrix clustered_features(std::size_t frames, std::size_t dims, std::size_t clusters, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> centres(clusters * dims);
    for (double & c : centres) {
        c = 3.0 * rng.normal();
    }
    FeatureMatrix f(frames, dims, Rational{1, 1}, FeatureKind::SemanticExternal);
    for (std::size_t t = 0; t < frames; ++t) {
        const std::size_t c = rng.below(clusters);
        for (std::size_t d = 0; d < dims; ++d) {
            f.at(t, d) = centres[c * dims + d] + 0.5 * rng.normal();
        }
    }
    return f;
}

inline double rms(const std::vector<double> & x) {
    double e = 0.0;
    for (double v : x) {
        e += v * v;
    }
    return x.empty() ? 0.0 : std::sqrt(e / static_cast<double>(x.size()));
}

} // namespace hcodec::test
