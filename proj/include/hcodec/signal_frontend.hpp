#pragma once

#include "hcodec/types.hpp"

#include <cstddef>
#include <vector>

namespace hcodec {

enum class WindowKind { Hann };

// Analysis/synthesis framing. The FFT size equals frame_length.
struct StftConfig {
    std::size_t frame_length = 1920;
    std::size_t hop_length = 960;
    WindowKind window = WindowKind::Hann;

    std::size_t bins() const { return frame_length / 2 + 1; }
    // Analysis only needs an even frame and 1 <= hop <= frame.
    void validate_analysis() const;
    // Resynthesis also needs hop to be exactly half the frame.
    void validate() const;
};

// Periodic Hann, w[n] + w[n + N/2] == 1.
std::vector<double> hann_window(std::size_t n);

// Number of full frames; 0 when the signal is shorter than one frame.
std::size_t frame_count(std::size_t samples, const StftConfig & cfg);

// T x (frame_length + 2): magnitudes of the N/2+1 bins followed by their
// phases in (-pi, pi].
FeatureMatrix stft_magphase(const Waveform & w, const StftConfig & cfg);

// Weighted overlap-add with squared-window normalization. Output length is
// (T-1)*hop + frame_length. Samples whose window envelope vanishes are zero.
Waveform istft(const FeatureMatrix & f, const StftConfig & cfg);

// Polar <-> Cartesian view of the same spectra: [mag | phase] <-> [re | im].
// The inverse returns phases in (-pi, pi].
FeatureMatrix magphase_to_complex(const FeatureMatrix & f);
FeatureMatrix complex_to_magphase(const FeatureMatrix & f);

// T x (N/2+1) magnitude spectrogram, same framing as stft_magphase.
FeatureMatrix magnitude_spectrogram(const Waveform & w, const StftConfig & cfg);

// n_mels x (N/2+1) triangular filters on the HTK mel scale, spanning
// 0 Hz to Nyquist, unit peak.
std::vector<std::vector<double>> mel_filterbank(std::size_t n_mels, std::size_t fft_size, std::uint32_t sample_rate);

// Mel-band power energies, T x n_mels.
FeatureMatrix mel_features(const Waveform & w, std::size_t n_mels, const StftConfig & cfg);

// Concatenate `factor` consecutive frames; the tail is zero padded.
FeatureMatrix stack_frames(const FeatureMatrix & f, std::size_t factor);
// Inverse of stack_frames given the original frame count.
FeatureMatrix unstack_frames(const FeatureMatrix & f, std::size_t factor, std::size_t original_frames);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

} // namespace hcodec
