#include "hcodec/signal_frontend.hpp"

#include "hcodec/error.hpp"
#include "hcodec/fft.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

namespace hcodec {

void StftConfig::validate_analysis() const {
    if (frame_length < 2 || frame_length % 2 != 0) {
        throw Error(Errc::InvalidConfig, "frame_length must be even and >= 2, got " + std::to_string(frame_length));
    }
    if (hop_length < 1 || hop_length > frame_length) {
        throw Error(Errc::InvalidConfig, "hop_length must be in [1, frame_length]");
    }
}

void StftConfig::validate() const {
    validate_analysis();
    if (hop_length * 2 != frame_length) {
        throw Error(Errc::InvalidConfig, "hop_length must be frame_length/2 for overlap-add reconstruction");
    }
}

std::vector<double> hann_window(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    }
    return w;
}

std::size_t frame_count(std::size_t samples, const StftConfig & cfg) {
    if (samples < cfg.frame_length) {
        return 0;
    }
    return 1 + (samples - cfg.frame_length) / cfg.hop_length;
}

namespace {

Rational frame_rate(std::uint32_t sample_rate, const StftConfig & cfg) {
    return Rational::make(sample_rate, cfg.hop_length);
}

template <typename PerFrame>
void for_each_spectrum(const Waveform & w, const StftConfig & cfg, PerFrame && per_frame) {
    cfg.validate_analysis();
    const std::size_t n_frames = frame_count(w.size(), cfg);
    if (n_frames == 0) {
        throw Error(Errc::InputTooShort, "waveform of " + std::to_string(w.size()) +
                                             " samples is shorter than one frame of " +
                                             std::to_string(cfg.frame_length));
    }
    const std::vector<double> window = hann_window(cfg.frame_length);
    const RealFft fft(cfg.frame_length);
    std::vector<double> frame(cfg.frame_length);
    std::vector<std::complex<double>> spec(fft.bins());
    for (std::size_t t = 0; t < n_frames; ++t) {
        const double * src = w.samples.data() + t * cfg.hop_length;
        for (std::size_t i = 0; i < cfg.frame_length; ++i) {
            frame[i] = src[i] * window[i];
        }
        fft.forward(frame, spec);
        per_frame(t, spec);
    }
}

} // namespace

FeatureMatrix stft_magphase(const Waveform & w, const StftConfig & cfg) {
    const std::size_t bins = cfg.bins();
    FeatureMatrix out(frame_count(w.size(), cfg), 2 * bins, frame_rate(w.sample_rate, cfg), FeatureKind::AcousticMagPhase);
    for_each_spectrum(w, cfg, [&](std::size_t t, const std::vector<std::complex<double>> & spec) {
        auto row = out.row(t);
        for (std::size_t k = 0; k < bins; ++k) {
            row[k] = std::abs(spec[k]);
            double phase = std::arg(spec[k]);
            if (phase <= -std::numbers::pi) {
                phase = std::numbers::pi;
            }
            row[bins + k] = phase;
        }
    });
    return out;
}

FeatureMatrix magnitude_spectrogram(const Waveform & w, const StftConfig & cfg) {
    const std::size_t bins = cfg.bins();
    FeatureMatrix out(frame_count(w.size(), cfg), bins, frame_rate(w.sample_rate, cfg), FeatureKind::AcousticMagPhase);
    for_each_spectrum(w, cfg, [&](std::size_t t, const std::vector<std::complex<double>> & spec) {
        auto row = out.row(t);
        for (std::size_t k = 0; k < bins; ++k) {
            row[k] = std::abs(spec[k]);
        }
    });
    return out;
}

FeatureMatrix magphase_to_complex(const FeatureMatrix & f) {
    if (f.dims() % 2 != 0) {
        throw Error(Errc::ShapeMismatch, "mag/phase features need an even dim");
    }
    const std::size_t bins = f.dims() / 2;
    FeatureMatrix out(f.frames(), f.dims(), f.fps(), FeatureKind::AcousticComplex);
    for (std::size_t t = 0; t < f.frames(); ++t) {
        auto src = f.row(t);
        auto dst = out.row(t);
        for (std::size_t k = 0; k < bins; ++k) {
            dst[k] = src[k] * std::cos(src[bins + k]);
            dst[bins + k] = src[k] * std::sin(src[bins + k]);
        }
    }
    return out;
}

FeatureMatrix complex_to_magphase(const FeatureMatrix & f) {
    if (f.dims() % 2 != 0) {
        throw Error(Errc::ShapeMismatch, "complex features need an even dim");
    }
    const std::size_t bins = f.dims() / 2;
    FeatureMatrix out(f.frames(), f.dims(), f.fps(), FeatureKind::AcousticMagPhase);
    for (std::size_t t = 0; t < f.frames(); ++t) {
        auto src = f.row(t);
        auto dst = out.row(t);
        for (std::size_t k = 0; k < bins; ++k) {
            dst[k] = std::hypot(src[k], src[bins + k]);
            const double phase = std::atan2(src[bins + k], src[k]);
            dst[bins + k] = phase <= -std::numbers::pi ? std::numbers::pi : phase;
        }
    }
    return out;
}

Waveform istft(const FeatureMatrix & f, const StftConfig & cfg) {
    cfg.validate();
    const std::size_t bins = cfg.bins();
    if (f.dims() != 2 * bins) {
        throw Error(Errc::ShapeMismatch, "feature dim " + std::to_string(f.dims()) + " != " +
                                             std::to_string(2 * bins) + " for frame_length " +
                                             std::to_string(cfg.frame_length));
    }
    if (f.frames() == 0) {
        throw Error(Errc::EmptyInput, "istft of zero frames");
    }
    const std::uint64_t sr_num = static_cast<std::uint64_t>(f.fps().num) * cfg.hop_length;
    if (f.fps().den == 0 || sr_num % f.fps().den != 0) {
        throw Error(Errc::ShapeMismatch, "frame rate is incompatible with hop length");
    }

    const std::size_t n = cfg.frame_length;
    const std::size_t out_len = (f.frames() - 1) * cfg.hop_length + n;
    Waveform out;
    out.sample_rate = static_cast<std::uint32_t>(sr_num / f.fps().den);
    out.samples.assign(out_len, 0.0);
    std::vector<double> envelope(out_len, 0.0);

    const std::vector<double> window = hann_window(n);
    const RealFft fft(n);
    std::vector<std::complex<double>> spec(bins);
    std::vector<double> frame(n);
    for (std::size_t t = 0; t < f.frames(); ++t) {
        auto row = f.row(t);
        for (std::size_t k = 0; k < bins; ++k) {
            spec[k] = std::polar(row[k], row[bins + k]);
        }
        fft.inverse(spec, frame);
        const std::size_t base = t * cfg.hop_length;
        for (std::size_t i = 0; i < n; ++i) {
            out.samples[base + i] += frame[i] * window[i];
            envelope[base + i] += window[i] * window[i];
        }
    }
    for (std::size_t i = 0; i < out_len; ++i) {
        out.samples[i] = envelope[i] > 1e-10 ? out.samples[i] / envelope[i] : 0.0;
    }
    return out;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<std::vector<double>> mel_filterbank(std::size_t n_mels, std::size_t fft_size, std::uint32_t sample_rate) {
    const std::size_t bins = fft_size / 2 + 1;
    if (n_mels < 1 || n_mels > bins) {
        throw Error(Errc::InvalidConfig, "n_mels must be in [1, " + std::to_string(bins) + "], got " +
                                             std::to_string(n_mels));
    }
    const double mel_hi = hz_to_mel(sample_rate / 2.0);
    std::vector<double> edges(n_mels + 2);
    for (std::size_t i = 0; i < edges.size(); ++i) {
        edges[i] = mel_to_hz(mel_hi * static_cast<double>(i) / static_cast<double>(n_mels + 1));
    }
    std::vector<std::vector<double>> bank(n_mels, std::vector<double>(bins, 0.0));
    for (std::size_t k = 0; k < bins; ++k) {
        const double hz = static_cast<double>(k) * sample_rate / static_cast<double>(fft_size);
        for (std::size_t m = 0; m < n_mels; ++m) {
            const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
            const double rising = (hz - lo) / (mid - lo);
            const double falling = (hi - hz) / (hi - mid);
            bank[m][k] = std::max(0.0, std::min(rising, falling));
        }
    }
    return bank;
}

FeatureMatrix mel_features(const Waveform & w, std::size_t n_mels, const StftConfig & cfg) {
    const auto bank = mel_filterbank(n_mels, cfg.frame_length, w.sample_rate);
    FeatureMatrix out(frame_count(w.size(), cfg), n_mels, frame_rate(w.sample_rate, cfg), FeatureKind::Mel);
    for_each_spectrum(w, cfg, [&](std::size_t t, const std::vector<std::complex<double>> & spec) {
        auto row = out.row(t);
        for (std::size_t m = 0; m < n_mels; ++m) {
            double acc = 0.0;
            const auto & filt = bank[m];
            for (std::size_t k = 0; k < spec.size(); ++k) {
                if (filt[k] != 0.0) {
                    acc += filt[k] * std::norm(spec[k]);
                }
            }
            row[m] = acc;
        }
    });
    return out;
}

FeatureMatrix stack_frames(const FeatureMatrix & f, std::size_t factor) {
    if (factor == 0) {
        throw Error(Errc::InvalidConfig, "stack factor must be >= 1");
    }
    const std::size_t frames = (f.frames() + factor - 1) / factor;
    FeatureMatrix out(frames, f.dims() * factor, Rational::make(f.fps().num, static_cast<std::uint64_t>(f.fps().den) * factor),
                      f.kind());
    for (std::size_t t = 0; t < f.frames(); ++t) {
        auto src = f.row(t);
        auto dst = out.row(t / factor).subspan((t % factor) * f.dims(), f.dims());
        std::copy(src.begin(), src.end(), dst.begin());
    }
    return out;
}

FeatureMatrix unstack_frames(const FeatureMatrix & f, std::size_t factor, std::size_t original_frames) {
    if (factor == 0 || f.dims() % factor != 0) {
        throw Error(Errc::InvalidConfig, "stack factor does not divide feature dim");
    }
    if (original_frames > f.frames() * factor || (original_frames + factor - 1) / factor != f.frames()) {
        throw Error(Errc::ShapeMismatch, "original frame count " + std::to_string(original_frames) +
                                             " incompatible with " + std::to_string(f.frames()) + " stacked frames");
    }
    const std::size_t dims = f.dims() / factor;
    FeatureMatrix out(original_frames, dims, Rational::make(static_cast<std::uint64_t>(f.fps().num) * factor, f.fps().den),
                      f.kind());
    for (std::size_t t = 0; t < original_frames; ++t) {
        auto src = f.row(t / factor).subspan((t % factor) * dims, dims);
        auto dst = out.row(t);
        std::copy(src.begin(), src.end(), dst.begin());
    }
    return out;
}

} // namespace hcodec
