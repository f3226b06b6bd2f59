#include "hcodec/dual_codec.hpp"

#include "hcodec/byte_io.hpp"
#include "hcodec/error.hpp"
#include "hcodec/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

namespace hcodec {

void CodecConfig::validate() const {
    if (sample_rate == 0) {
        throw Error(Errc::InvalidConfig, "sample rate must be positive");
    }
    stft.validate();
    if (stack_factor == 0) {
        throw Error(Errc::InvalidConfig, "stack factor must be >= 1");
    }
    if (nq_acoustic < 1 || nq_semantic < 1 || nq_acoustic > 255 || nq_semantic > 255) {
        throw Error(Errc::InvalidConfig, "layer counts must be in [1, 255]");
    }
    if (codebook_size < 1 || codebook_size > 65535) {
        throw Error(Errc::InvalidConfig, "codebook size must be in [1, 65535]");
    }
    if (dynamic) {
        dynamic->validate();
    }
    // codes, PAD and task tokens all share the 16-bit id space of the LM export
    if (static_cast<std::uint64_t>(codebook_size) * max_duration() + 8 > 65536) {
        throw Error(Errc::InvalidConfig, "K * d_max leaves no room for PAD and task tokens in 16 bits");
    }
    if (semantic_source == SemanticSource::Proxy && (proxy_mels < 1 || proxy_mels > stft.bins())) {
        throw Error(Errc::InvalidConfig, "proxy mel count exceeds the number of STFT bins");
    }
}

Rational CodecConfig::frame_rate() const {
    return Rational::make(sample_rate, static_cast<std::uint64_t>(stft.hop_length) * stack_factor);
}

std::uint64_t CodecConfig::fingerprint() const {
    ByteWriter w;
    w.bytes("HCFG");
    w.u32(sample_rate);
    w.u64(stft.frame_length);
    w.u64(stft.hop_length);
    w.u64(stack_factor);
    w.u64(nq_acoustic);
    w.u64(nq_semantic);
    w.u64(codebook_size);
    w.u8(dynamic ? 1 : 0);
    if (dynamic) {
        w.u64(std::bit_cast<std::uint64_t>(dynamic->threshold));
        w.u64(dynamic->max_duration);
        w.u64(dynamic->window);
    }
    w.u8(static_cast<std::uint8_t>(semantic_source));
    w.u64(proxy_mels);
    w.u64(proxy_smoothing);
    const auto & b = w.buffer();
    return fnv1a64(std::string_view(reinterpret_cast<const char *>(b.data()), b.size()));
}

std::uint64_t codec_fingerprint(const CodecConfig & cfg, const CodecStacks & stacks) {
    std::uint64_t h = cfg.fingerprint();
    h = splitmix64(h ^ stacks.acoustic.fingerprint());
    h = splitmix64(h ^ stacks.semantic.fingerprint());
    return h;
}

FeatureMatrix semantic_proxy(const Waveform & w, const CodecConfig & cfg) {
    FeatureMatrix mel = mel_features(w, cfg.proxy_mels, cfg.stft);
    const std::size_t frames = mel.frames();
    const std::size_t dims = mel.dims();
    // Per-bin power density, so a flat spectrum gives a flat profile whatever
    // the band widths.
    std::vector<double> area(dims, 0.0);
    const auto bank = mel_filterbank(cfg.proxy_mels, cfg.stft.frame_length, w.sample_rate);
    for (std::size_t d = 0; d < dims; ++d) {
        for (double v : bank[d]) {
            area[d] += v;
        }
    }
    for (std::size_t t = 0; t < frames; ++t) {
        auto row = mel.row(t);
        for (std::size_t d = 0; d < dims; ++d) {
            row[d] = std::log((area[d] > 0.0 ? row[d] / area[d] : 0.0) + 1e-8);
        }
    }
    double grand = 0.0;
    for (double v : mel.data()) {
        grand += v;
    }
    grand /= static_cast<double>(mel.data().size());

    std::vector<double> scale(dims, 1.0);
    for (std::size_t d = 0; d < dims; ++d) {
        double mean = 0.0;
        for (std::size_t t = 0; t < frames; ++t) {
            mean += mel.at(t, d);
        }
        mean /= static_cast<double>(frames);
        double var = 0.0;
        for (std::size_t t = 0; t < frames; ++t) {
            const double c = mel.at(t, d) - mean;
            var += c * c;
        }
        scale[d] = std::max(std::sqrt(var / static_cast<double>(frames)), 1.0);
    }

    FeatureMatrix z(frames, dims, mel.fps(), FeatureKind::SemanticProxy);
    for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t d = 0; d < dims; ++d) {
            z.at(t, d) = (mel.at(t, d) - grand) / scale[d];
        }
    }
    if (cfg.proxy_smoothing == 0) {
        return z;
    }
    const std::size_t half = cfg.proxy_smoothing;
    FeatureMatrix out(frames, dims, mel.fps(), FeatureKind::SemanticProxy);
    for (std::size_t t = 0; t < frames; ++t) {
        const std::size_t lo = t >= half ? t - half : 0;
        const std::size_t hi = std::min(frames - 1, t + half);
        auto dst = out.row(t);
        for (std::size_t j = lo; j <= hi; ++j) {
            auto src = z.row(j);
            for (std::size_t d = 0; d < dims; ++d) {
                dst[d] += src[d];
            }
        }
        const double inv = 1.0 / static_cast<double>(hi - lo + 1);
        for (double & v : dst) {
            v *= inv;
        }
    }
    return out;
}

AnalysisFeatures analyze(const Waveform & w, const CodecConfig & cfg, const FeatureMatrix * external_semantic) {
    cfg.validate();
    if (w.sample_rate != cfg.sample_rate) {
        throw Error(Errc::ShapeMismatch, "waveform at " + std::to_string(w.sample_rate) + " Hz, codec expects " +
                                             std::to_string(cfg.sample_rate) + " Hz");
    }
    AnalysisFeatures out;
    const FeatureMatrix magphase = stft_magphase(w, cfg.stft);
    out.stft_frames = magphase.frames();
    // quantized as re/im so that feature-space error is spectral error
    out.acoustic = stack_frames(magphase_to_complex(magphase), cfg.stack_factor);

    if (cfg.semantic_source == SemanticSource::External || external_semantic != nullptr) {
        if (external_semantic == nullptr) {
            throw Error(Errc::InvalidConfig, "codec expects external semantic features");
        }
        if (external_semantic->fps() != cfg.frame_rate()) {
            throw Error(Errc::ShapeMismatch, "external features at " + std::to_string(external_semantic->fps().value()) +
                                                 " fps, codec runs at " + std::to_string(cfg.frame_rate().value()));
        }
        if (external_semantic->frames() != out.acoustic.frames()) {
            throw Error(Errc::ShapeMismatch, "external features have " + std::to_string(external_semantic->frames()) +
                                                 " frames, expected " + std::to_string(out.acoustic.frames()));
        }
        out.semantic = *external_semantic;
    } else {
        out.semantic = stack_frames(semantic_proxy(w, cfg), cfg.stack_factor);
    }

    if (cfg.dynamic) {
        SegmentPartition part = segment_by_similarity(out.semantic, *cfg.dynamic);
        out.acoustic = aggregate(out.acoustic, part);
        out.semantic = aggregate(out.semantic, part);
        out.partition = std::move(part);
    }
    return out;
}

namespace {

void check_stacks(const CodecConfig & cfg, const CodecStacks & stacks, std::size_t semantic_dim) {
    if (!stacks.acoustic.trained() || !stacks.semantic.trained()) {
        throw Error(Errc::NotTrained, "both acoustic and semantic stacks must be trained");
    }
    if (stacks.acoustic.num_layers() != cfg.nq_acoustic || stacks.semantic.num_layers() != cfg.nq_semantic) {
        throw Error(Errc::ShapeMismatch, "stack depths do not match the codec config");
    }
    for (const RvqStack * s : {&stacks.acoustic, &stacks.semantic}) {
        for (const Codebook & cb : s->layers) {
            if (cb.size() != cfg.codebook_size || cb.dim() != s->dim()) {
                throw Error(Errc::ShapeMismatch, std::string(stream_name(s->stream)) +
                                                     " codebook shape does not match the codec config");
            }
        }
    }
    if (stacks.acoustic.dim() != cfg.acoustic_dim()) {
        throw Error(Errc::ShapeMismatch, "acoustic codebook dim " + std::to_string(stacks.acoustic.dim()) +
                                             " != " + std::to_string(cfg.acoustic_dim()));
    }
    if (semantic_dim != 0 && stacks.semantic.dim() != semantic_dim) {
        throw Error(Errc::ShapeMismatch, "semantic codebook dim " + std::to_string(stacks.semantic.dim()) +
                                             " != " + std::to_string(semantic_dim));
    }
}

void embed_durations(CodeGrid & grid, const SegmentPartition & part, const CodecConfig & cfg) {
    const auto k = static_cast<std::uint32_t>(cfg.codebook_size);
    for (std::size_t t = 0; t < grid.frames; ++t) {
        grid.at(0, t) = encode_duration(grid.at(0, t), part.durations[t], k, cfg.max_duration()).value;
    }
}

} // namespace

EncodedAudio encode(const Waveform & w, const CodecConfig & cfg, const CodecStacks & stacks,
                    const FeatureMatrix * external_semantic) {
    cfg.validate();
    AnalysisFeatures feats = analyze(w, cfg, external_semantic);
    check_stacks(cfg, stacks, feats.semantic.dims());

    EncodedAudio enc;
    enc.acoustic = rvq_encode(stacks.acoustic, feats.acoustic);
    enc.semantic = rvq_encode(stacks.semantic, feats.semantic);
    if (feats.partition) {
        embed_durations(enc.acoustic, *feats.partition, cfg);
        embed_durations(enc.semantic, *feats.partition, cfg);
        enc.partition = std::move(feats.partition);
    }
    enc.original_len = w.size();
    enc.sample_rate = w.sample_rate;
    enc.fps = cfg.frame_rate();
    enc.codebook_size = static_cast<std::uint32_t>(cfg.codebook_size);
    enc.max_duration = cfg.max_duration();
    enc.fingerprint = codec_fingerprint(cfg, stacks);
    return enc;
}

CodeGrid strip_durations(const CodeGrid & grid, const EncodedAudio & enc) {
    CodeGrid plain = grid;
    if (!enc.partition) {
        return plain;
    }
    if (enc.partition->segments() != grid.frames) {
        throw Error(Errc::CodecMismatch, "partition has " + std::to_string(enc.partition->segments()) +
                                             " segments, grid has " + std::to_string(grid.frames) + " frames");
    }
    for (std::size_t t = 0; t < grid.frames; ++t) {
        const CodeWithDuration cd = decode_duration(DurationCode{grid.at(0, t)}, enc.codebook_size, enc.max_duration);
        if (cd.duration != enc.partition->durations[t]) {
            throw Error(Errc::CodecMismatch, "embedded duration " + std::to_string(cd.duration) + " at segment " +
                                                 std::to_string(t) + " disagrees with the partition");
        }
        plain.at(0, t) = cd.code;
    }
    return plain;
}

DecodedStreams decode_streams(const EncodedAudio & enc, const CodecConfig & cfg, const CodecStacks & stacks) {
    cfg.validate();
    check_stacks(cfg, stacks, 0);
    if (enc.fingerprint != codec_fingerprint(cfg, stacks)) {
        throw Error(Errc::CodecMismatch, "token stream was produced by a different codec configuration or codebooks");
    }
    if (enc.acoustic.frames != enc.semantic.frames) {
        throw Error(Errc::CodecMismatch, "acoustic and semantic streams disagree on frame count");
    }
    if (enc.partition.has_value() != cfg.dynamic.has_value()) {
        throw Error(Errc::CodecMismatch, "dynamic flag does not match the codec config");
    }

    const std::size_t stft_frames = frame_count(enc.original_len, cfg.stft);
    const std::size_t stacked_frames = (stft_frames + cfg.stack_factor - 1) / cfg.stack_factor;
    const Rational fps = cfg.frame_rate();

    DecodedStreams out;
    out.acoustic = rvq_decode(stacks.acoustic, strip_durations(enc.acoustic, enc), fps, FeatureKind::AcousticComplex);
    out.semantic = rvq_decode(stacks.semantic, strip_durations(enc.semantic, enc), fps,
                              cfg.semantic_source == SemanticSource::Proxy ? FeatureKind::SemanticProxy
                                                                           : FeatureKind::SemanticExternal);
    if (enc.partition) {
        const std::size_t window = cfg.dynamic->window;
        out.acoustic = deaggregate(out.acoustic, *enc.partition, window);
        out.semantic = deaggregate(out.semantic, *enc.partition, window);
    }
    if (out.acoustic.frames() != stacked_frames) {
        throw Error(Errc::CodecMismatch, "token frames " + std::to_string(out.acoustic.frames()) +
                                             " inconsistent with original length (" + std::to_string(stacked_frames) +
                                             " expected)");
    }
    FeatureMatrix magphase = complex_to_magphase(unstack_frames(out.acoustic, cfg.stack_factor, stft_frames));
    out.waveform = istft(magphase, cfg.stft);
    out.waveform.samples.resize(enc.original_len, 0.0);
    return out;
}

Waveform decode(const EncodedAudio & enc, const CodecConfig & cfg, const CodecStacks & stacks) {
    return decode_streams(enc, cfg, stacks).waveform;
}

CodecStacks train_codec(const std::vector<Waveform> & corpus, const CodecConfig & cfg, const CodecTrainOptions & opts,
                        CodecTrainReport * report, const std::vector<FeatureMatrix> * external_semantic) {
    cfg.validate();
    if (corpus.empty()) {
        throw Error(Errc::InsufficientData, "empty training corpus");
    }
    if (external_semantic != nullptr && external_semantic->size() != corpus.size()) {
        throw Error(Errc::ShapeMismatch, "one external feature matrix per clip is required");
    }
    std::vector<AnalysisFeatures> parts;
    parts.reserve(corpus.size());
    std::size_t total = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const FeatureMatrix * ext = external_semantic != nullptr ? &(*external_semantic)[i] : nullptr;
        parts.push_back(analyze(corpus[i], cfg, ext));
        if (parts.back().semantic.dims() != parts.front().semantic.dims()) {
            throw Error(Errc::ShapeMismatch, "semantic feature dims differ between clips");
        }
        total += parts.back().acoustic.frames();
    }
    auto concat = [&](auto member) {
        const FeatureMatrix & first = parts.front().*member;
        FeatureMatrix all(total, first.dims(), first.fps(), first.kind());
        auto out = all.data().begin();
        for (const AnalysisFeatures & p : parts) {
            out = std::copy((p.*member).data().begin(), (p.*member).data().end(), out);
        }
        return all;
    };
    const FeatureMatrix acoustic = concat(&AnalysisFeatures::acoustic);
    const FeatureMatrix semantic = concat(&AnalysisFeatures::semantic);

    RvqTrainOptions ro;
    ro.codebook_size = cfg.codebook_size;
    ro.seed = opts.seed;
    ro.iters = opts.iters;
    ro.ema_passes = opts.ema_passes;

    CodecStacks stacks;
    ro.num_layers = cfg.nq_acoustic;
    stacks.acoustic = train_rvq(acoustic, ro, Stream::Acoustic, report != nullptr ? &report->acoustic : nullptr);
    ro.num_layers = cfg.nq_semantic;
    stacks.semantic = train_rvq(semantic, ro, Stream::Semantic, report != nullptr ? &report->semantic : nullptr);
    if (report != nullptr) {
        report->frames = acoustic.frames();
    }
    return stacks;
}

} // namespace hcodec
