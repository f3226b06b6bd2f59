#pragma once

#include "hcodec/conditioning.hpp"
#include "hcodec/types.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace hcodec {

// Listed in application order.
enum class DistortionKind : std::uint8_t {
    AdditiveNoise = 0,
    Reverb,
    Clipping,
    Bandwidth,
    PacketLoss,
    Interferer,
};

inline constexpr std::array<DistortionKind, 6> kDistortionOrder = {
    DistortionKind::AdditiveNoise, DistortionKind::Reverb,     DistortionKind::Clipping,
    DistortionKind::Bandwidth,     DistortionKind::PacketLoss, DistortionKind::Interferer};

std::string_view distortion_name(DistortionKind kind);

struct Range {
    double lo = 0.0;
    double hi = 0.0;
    friend bool operator==(const Range &, const Range &) = default;
};

struct ChainConfig {
    std::uint64_t seed = 0;
    std::array<double, 6> probability = {0.5, 0.4, 0.3, 0.3, 0.3, 0.2};
    Range snr_db{-15.0, 20.0};
    // synthetic RIR only; pool RIRs are used as given
    Range t60_s{0.2, 0.8};
    Range min_quantile{0.0, 0.1};
    Range max_quantile{0.9, 1.0};
    std::vector<double> cutoff_hz{2000.0, 4000.0};
    Range loss_rate{0.05, 0.25};
    double packet_ms = 20.0;
    Range sir_db{15.0, 25.0};
    // Generate noise, RIRs and interferers when an asset pool is empty.
    bool synthetic_fallback = true;

    double & p(DistortionKind k) { return probability[static_cast<std::size_t>(k)]; }
    double p(DistortionKind k) const { return probability[static_cast<std::size_t>(k)]; }
    void validate() const;
    friend bool operator==(const ChainConfig &, const ChainConfig &) = default;
};

// TSE/rTSE: interferer always on with SIR in [-5, 5] dB. LASS: only the
// interfering mixture, SIR in [-5, 20] dB. Other modes are unchanged.
ChainConfig with_mode(ChainConfig cfg, TaskMode mode);

std::string chain_config_to_json(const ChainConfig & cfg);
ChainConfig chain_config_from_json(std::string_view json);

struct Assets {
    std::vector<Waveform> noise;
    std::vector<Waveform> rir;
    std::vector<Waveform> interferer;
};

// Requests at or above this SNR/SIR leave the signal untouched.
inline constexpr double kNoOpRatioDb = 80.0;

// w + g * n with g = (rms(w) / rms(n)) * 10^(-snr/20). The noise is tiled when
// shorter and read from `offset` when longer; rms(n) is taken over the samples
// actually added.
Waveform add_noise(const Waveform & w, const Waveform & noise, double snr_db, std::size_t offset = 0);
Waveform mix_interferer(const Waveform & w, const Waveform & interferer, double sir_db, std::size_t offset = 0);

// Empirical quantiles use linear interpolation between order statistics.
double quantile(std::span<const double> values, double q);
Waveform clip_quantile(const Waveform & w, double q_lo, double q_hi);

inline constexpr std::size_t kLowpassTaps = 255;
// Hamming-windowed sinc, unit DC gain.
std::vector<double> lowpass_taps(double cutoff_hz, std::uint32_t sample_rate, std::size_t taps = kLowpassTaps);
// Zero-phase application of the linear-phase low-pass (delay compensated).
Waveform bandlimit(const Waveform & w, double cutoff_hz);

struct PacketLossStats {
    std::size_t packets = 0;
    std::size_t dropped = 0;
};
// Zero-fills a random set of packet_ms packets; the number lost is
// floor(rate * n) or one more, so the realised rate is within 1/n of `rate`.
Waveform packet_loss(const Waveform & w, double rate, double packet_ms, std::uint64_t seed,
                     PacketLossStats * stats = nullptr);

// Full linear convolution truncated to len(w).
Waveform reverb(const Waveform & w, std::span<const double> rir);
// Exponentially decaying Gaussian noise reaching -60 dB at t60, unit energy.
std::vector<double> synthetic_rir(double t60_s, std::uint32_t sample_rate, std::uint64_t seed);

struct AppliedDistortion {
    DistortionKind kind = DistortionKind::AdditiveNoise;
    std::map<std::string, double> params;
    std::uint64_t seed = 0;
    // index into the matching asset pool, -1 for a synthetic asset
    std::int64_t asset = -1;
    friend bool operator==(const AppliedDistortion &, const AppliedDistortion &) = default;
};

// The sampled chain; it is also the log, and applying it again reproduces
// the same output bit for bit.
struct ChainPlan {
    std::uint64_t seed = 0;
    std::vector<AppliedDistortion> ops;
    friend bool operator==(const ChainPlan &, const ChainPlan &) = default;
};

// Each distortion draws from its own stream derived from (seed, kind), so
// the application decisions are independent.
ChainPlan plan_chain(const ChainConfig & cfg, const Assets & assets);
Waveform apply_plan(const Waveform & w, const ChainPlan & plan, const Assets & assets);

struct ChainResult {
    Waveform degraded;
    ChainPlan log;
};
ChainResult run_chain(const Waveform & w, const ChainConfig & cfg, const Assets & assets);

std::string plan_to_json(const ChainPlan & plan);
ChainPlan plan_from_json(std::string_view json);

} // namespace hcodec
