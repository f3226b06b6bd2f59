#pragma once

#include "hcodec/framerate.hpp"
#include "hcodec/quantizer.hpp"
#include "hcodec/signal_frontend.hpp"
#include "hcodec/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace hcodec {

enum class SemanticSource : std::uint8_t { Proxy = 0, External = 1 };

struct CodecConfig {
    std::uint32_t sample_rate = 16000;
    StftConfig stft{640, 320};
    std::size_t stack_factor = 2;
    std::size_t nq_acoustic = 4;
    std::size_t nq_semantic = 4;
    std::size_t codebook_size = 1024;
    std::optional<AggregationConfig> dynamic;
    SemanticSource semantic_source = SemanticSource::Proxy;
    // log-mel proxy for the SSL branch
    std::size_t proxy_mels = 80;
    std::size_t proxy_smoothing = 2;

    void validate() const;
    // token frames per second before any dynamic aggregation
    Rational frame_rate() const;
    std::uint32_t max_duration() const { return dynamic ? static_cast<std::uint32_t>(dynamic->max_duration) : 1u; }
    std::size_t acoustic_dim() const { return (stft.frame_length + 2) * stack_factor; }
    std::size_t proxy_dim() const { return proxy_mels * stack_factor; }
    std::uint64_t fingerprint() const;
};

struct CodecStacks {
    RvqStack acoustic;
    RvqStack semantic;
};

std::uint64_t codec_fingerprint(const CodecConfig & cfg, const CodecStacks & stacks);

struct EncodedAudio {
    CodeGrid acoustic;
    CodeGrid semantic;
    // present iff the codec ran with dynamic aggregation
    std::optional<SegmentPartition> partition;
    std::uint64_t original_len = 0;
    std::uint32_t sample_rate = 0;
    Rational fps{};
    std::uint32_t codebook_size = 0;
    std::uint32_t max_duration = 1;
    std::uint64_t fingerprint = 0;

    std::size_t frames() const { return acoustic.frames; }
    double seconds() const { return sample_rate == 0 ? 0.0 : static_cast<double>(original_len) / sample_rate; }

    friend bool operator==(const EncodedAudio &, const EncodedAudio &) = default;
};

// Model-rate features: stacked, and aggregated when the config is dynamic.
struct AnalysisFeatures {
    FeatureMatrix acoustic;
    FeatureMatrix semantic;
    std::size_t stft_frames = 0;
    std::optional<SegmentPartition> partition;
};

// Deterministic stand-in for SSL features at the STFT frame rate: 80-band
// log-mel power density (band energy over filter area), centred on the
// utterance mean, scaled per band by max(std, 1), then smoothed over
// +-proxy_smoothing frames.
FeatureMatrix semantic_proxy(const Waveform & w, const CodecConfig & cfg);

// `external_semantic` replaces the proxy; it must already be at frame_rate()
// with one row per stacked frame.
AnalysisFeatures analyze(const Waveform & w, const CodecConfig & cfg, const FeatureMatrix * external_semantic = nullptr);

EncodedAudio encode(const Waveform & w, const CodecConfig & cfg, const CodecStacks & stacks,
                    const FeatureMatrix * external_semantic = nullptr);

struct DecodedStreams {
    // model-rate features after de-aggregation (stacked layout)
    FeatureMatrix acoustic;
    FeatureMatrix semantic;
    Waveform waveform;
};

DecodedStreams decode_streams(const EncodedAudio & enc, const CodecConfig & cfg, const CodecStacks & stacks);
Waveform decode(const EncodedAudio & enc, const CodecConfig & cfg, const CodecStacks & stacks);

// Plain per-layer codes with layer-0 duration embedding removed; checks the
// embedded durations against the stored partition.
CodeGrid strip_durations(const CodeGrid & grid, const EncodedAudio & enc);

struct CodecTrainOptions {
    std::uint64_t seed = 0;
    std::size_t iters = 25;
    std::size_t ema_passes = 0;
};

struct CodecTrainReport {
    RvqTrainReport acoustic;
    RvqTrainReport semantic;
    std::size_t frames = 0;
};

// Trains both stacks on the model-rate features of a corpus.
// `external_semantic`, when given, holds one feature matrix per clip.
CodecStacks train_codec(const std::vector<Waveform> & corpus, const CodecConfig & cfg, const CodecTrainOptions & opts,
                        CodecTrainReport * report = nullptr,
                        const std::vector<FeatureMatrix> * external_semantic = nullptr);

} // namespace hcodec
