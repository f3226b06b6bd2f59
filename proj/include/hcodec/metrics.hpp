#pragma once

#include "hcodec/dual_codec.hpp"
#include "hcodec/types.hpp"

#include <cstddef>
#include <cstdint>

namespace hcodec {

struct SpectralLossConfig {
    std::size_t window = 1024;
    std::size_t hop = 256;
    std::size_t n_mels = 100;
};

// Mean absolute difference of STFT magnitudes over all frames and bins.
// Inputs of unequal length are zero padded to the longer one, and both are
// padded to at least one window.
double stft_loss(const Waveform & a, const Waveform & b, const SpectralLossConfig & cfg = {});
// Same on mel-band power energies.
double mel_loss(const Waveform & a, const Waveform & b, const SpectralLossConfig & cfg = {});

inline constexpr double kSnrCapDb = 120.0;

// 10 log10(|clean|^2 / |clean - test|^2), clamped to +-kSnrCapDb.
double snr_db(const Waveform & clean, const Waveform & test);
// Scale-invariant SNR on mean-removed signals, clamped the same way.
double si_snr_db(const Waveform & clean, const Waveform & test);

struct RateReport {
    double fps_nominal = 0.0;
    double fps_effective = 0.0;
    std::uint32_t bits_per_code = 0;
    std::size_t nq_total = 0;
    double bps_simple = 0.0;
    double bps_duration_aware = 0.0;
};

// ceil(log2 n) for n >= 1
std::uint32_t bits_for(std::uint64_t n);

// Rates of a configuration. `duration_layers` layers carry codes in
// [0, K * d_max) instead of [0, K).
RateReport rate_for(double fps, std::size_t nq_total, std::uint32_t codebook_size, std::uint32_t max_duration = 1,
                    std::size_t duration_layers = 0);

// Static streams report the nominal rate. Dynamic streams report segments
// per second of audio covered by the partition, and their layer 0 in both
// streams carries durations.
RateReport rate_report(const EncodedAudio & enc);

} // namespace hcodec
