#include "hcodec/metrics.hpp"

#include "hcodec/error.hpp"
#include "hcodec/framerate.hpp"
#include "hcodec/signal_frontend.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <bit>
#include <cmath>

namespace hcodec {

namespace {

std::pair<Waveform, Waveform> aligned(const Waveform & a, const Waveform & b, std::size_t min_len) {
    if (a.samples.empty() || b.samples.empty()) {
        throw Error(Errc::EmptyInput, "spectral loss needs nonempty signals");
    }
    if (a.sample_rate != b.sample_rate) {
        throw Error(Errc::ShapeMismatch, "sample rates differ: " + std::to_string(a.sample_rate) + " vs " +
                                             std::to_string(b.sample_rate));
    }
    if (a.size() != b.size()) {
        spdlog::warn("loss inputs differ in length ({} vs {}), zero padding the shorter", a.size(), b.size());
    }
    const std::size_t n = std::max({a.size(), b.size(), min_len});
    Waveform pa = a;
    Waveform pb = b;
    pa.samples.resize(n, 0.0);
    pb.samples.resize(n, 0.0);
    return {std::move(pa), std::move(pb)};
}

StftConfig loss_stft(const SpectralLossConfig & cfg) {
    if (cfg.window == 0 || cfg.window % 2 != 0 || cfg.hop == 0) {
        throw Error(Errc::InvalidConfig, "loss window must be even and hop positive");
    }
    StftConfig s;
    s.frame_length = cfg.window;
    s.hop_length = cfg.hop;
    return s;
}

double mean_abs_diff(const FeatureMatrix & x, const FeatureMatrix & y) {
    double acc = 0.0;
    const auto & a = x.data();
    const auto & b = y.data();
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += std::abs(a[i] - b[i]);
    }
    return acc / static_cast<double>(a.size());
}

double clamp_db(double v) {
    if (std::isnan(v)) {
        return 0.0;
    }
    return std::clamp(v, -kSnrCapDb, kSnrCapDb);
}

double ratio_db(double signal, double noise) {
    if (noise == 0.0) {
        return signal == 0.0 ? 0.0 : kSnrCapDb;
    }
    if (signal == 0.0) {
        return -kSnrCapDb;
    }
    return clamp_db(10.0 * std::log10(signal / noise));
}

} // namespace

double stft_loss(const Waveform & a, const Waveform & b, const SpectralLossConfig & cfg) {
    const StftConfig s = loss_stft(cfg);
    auto [pa, pb] = aligned(a, b, cfg.window);
    return mean_abs_diff(magnitude_spectrogram(pa, s), magnitude_spectrogram(pb, s));
}

double mel_loss(const Waveform & a, const Waveform & b, const SpectralLossConfig & cfg) {
    const StftConfig s = loss_stft(cfg);
    auto [pa, pb] = aligned(a, b, cfg.window);
    return mean_abs_diff(mel_features(pa, cfg.n_mels, s), mel_features(pb, cfg.n_mels, s));
}

double snr_db(const Waveform & clean, const Waveform & test) {
    if (clean.size() != test.size()) {
        throw Error(Errc::ShapeMismatch, "snr needs equal lengths");
    }
    if (clean.samples.empty()) {
        throw Error(Errc::EmptyInput, "snr of empty signals");
    }
    double s = 0.0;
    double n = 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i) {
        const double e = clean.samples[i] - test.samples[i];
        s += clean.samples[i] * clean.samples[i];
        n += e * e;
    }
    return ratio_db(s, n);
}

double si_snr_db(const Waveform & clean, const Waveform & test) {
    if (clean.size() != test.size()) {
        throw Error(Errc::ShapeMismatch, "si-snr needs equal lengths");
    }
    if (clean.samples.empty()) {
        throw Error(Errc::EmptyInput, "si-snr of empty signals");
    }
    const double n = static_cast<double>(clean.size());
    double mc = 0.0;
    double mt = 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i) {
        mc += clean.samples[i];
        mt += test.samples[i];
    }
    mc /= n;
    mt /= n;
    double dot = 0.0;
    double cc = 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i) {
        dot += (clean.samples[i] - mc) * (test.samples[i] - mt);
        cc += (clean.samples[i] - mc) * (clean.samples[i] - mc);
    }
    if (cc == 0.0) {
        throw Error(Errc::SilentInput, "si-snr reference is constant");
    }
    const double alpha = dot / cc;
    double s = 0.0;
    double e = 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i) {
        const double target = alpha * (clean.samples[i] - mc);
        const double err = (test.samples[i] - mt) - target;
        s += target * target;
        e += err * err;
    }
    return ratio_db(s, e);
}

std::uint32_t bits_for(std::uint64_t n) {
    if (n == 0) {
        throw Error(Errc::InvalidConfig, "alphabet size must be positive");
    }
    return static_cast<std::uint32_t>(std::bit_width(n - 1));
}

RateReport rate_for(double fps, std::size_t nq_total, std::uint32_t codebook_size, std::uint32_t max_duration,
                    std::size_t duration_layers) {
    if (duration_layers > nq_total) {
        throw Error(Errc::InvalidConfig, "more duration layers than layers");
    }
    RateReport r;
    r.fps_nominal = fps;
    r.fps_effective = fps;
    r.bits_per_code = bits_for(codebook_size);
    r.nq_total = nq_total;
    r.bps_simple = fps * static_cast<double>(nq_total * r.bits_per_code);
    const std::uint32_t duration_bits = bits_for(static_cast<std::uint64_t>(codebook_size) * max_duration);
    r.bps_duration_aware =
        fps * static_cast<double>((nq_total - duration_layers) * r.bits_per_code + duration_layers * duration_bits);
    return r;
}

RateReport rate_report(const EncodedAudio & enc) {
    if (enc.original_len == 0 || enc.sample_rate == 0 || enc.frames() == 0) {
        throw Error(Errc::EmptyInput, "rate of zero-duration audio");
    }
    const std::size_t nq = enc.acoustic.layers + enc.semantic.layers;
    if (!enc.partition) {
        return rate_for(enc.fps.value(), nq, enc.codebook_size);
    }
    const double eff = effective_fps(*enc.partition, enc.fps);
    RateReport r = rate_for(eff, nq, enc.codebook_size, enc.max_duration, 2);
    r.fps_nominal = enc.fps.value();
    return r;
}

} // namespace hcodec
