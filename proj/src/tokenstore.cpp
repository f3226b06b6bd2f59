#include "hcodec/tokenstore.hpp"

#include "hcodec/byte_io.hpp"
#include "hcodec/error.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace hcodec {

namespace {

void expect_magic(ByteReader & r, std::string_view magic, Errc code) {
    if (r.remaining() < magic.size()) {
        throw Error(code, "file shorter than its magic", r.offset());
    }
    if (r.bytes(magic.size()) != magic) {
        throw Error(code, "bad magic, expected " + std::string(magic), 0);
    }
}

void expect_version(ByteReader & r, std::uint8_t want) {
    const std::uint64_t at = r.offset();
    const std::uint8_t v = r.u8();
    if (v != want) {
        throw Error(Errc::CorruptFile, "unsupported version " + std::to_string(v), at);
    }
}

void expect_end(const ByteReader & r) {
    if (r.remaining() != 0) {
        throw Error(Errc::CorruptFile, std::to_string(r.remaining()) + " trailing bytes", r.offset());
    }
}

std::uint32_t code_limit(const EncodedAudio & enc, std::size_t layer) {
    return (enc.partition && layer == 0) ? enc.codebook_size * enc.max_duration : enc.codebook_size;
}

void check_grid_for_write(const EncodedAudio & enc, const CodeGrid & g) {
    if (g.frames != enc.acoustic.frames || g.codes.size() != g.layers * g.frames) {
        throw Error(Errc::ShapeMismatch, "code grid shape is inconsistent");
    }
    for (std::size_t l = 0; l < g.layers; ++l) {
        const std::uint32_t limit = code_limit(enc, l);
        for (std::size_t t = 0; t < g.frames; ++t) {
            if (g.at(l, t) >= limit) {
                throw Error(Errc::CodeOutOfRange, "code " + std::to_string(g.at(l, t)) + " at layer " +
                                                      std::to_string(l) + " >= " + std::to_string(limit));
            }
        }
    }
}

} // namespace

std::vector<std::uint8_t> write_tokens(const EncodedAudio & enc) {
    const std::size_t frames = enc.acoustic.frames;
    if (frames == 0 || frames > std::numeric_limits<std::uint32_t>::max()) {
        throw Error(Errc::EmptyInput, "token stream needs at least one frame");
    }
    if (enc.codebook_size == 0 || enc.codebook_size > 65535 || enc.max_duration == 0 || enc.max_duration > 255 ||
        enc.acoustic.layers == 0 || enc.acoustic.layers > 255 || enc.semantic.layers == 0 ||
        enc.semantic.layers > 255 || enc.fps.den == 0) {
        throw Error(Errc::InvalidConfig, "header field out of range");
    }
    if (static_cast<std::uint64_t>(enc.codebook_size) * enc.max_duration > 65536) {
        throw Error(Errc::InvalidConfig, "K * d_max exceeds the 16-bit code cell");
    }
    if (!enc.partition && enc.max_duration != 1) {
        throw Error(Errc::InvalidConfig, "static token streams carry d_max = 1");
    }
    check_grid_for_write(enc, enc.acoustic);
    check_grid_for_write(enc, enc.semantic);
    if (enc.partition) {
        if (enc.partition->segments() != frames) {
            throw Error(Errc::ShapeMismatch, "partition length differs from frame count");
        }
        enc.partition->validate(enc.max_duration);
    }

    ByteWriter w;
    w.bytes("HTOK");
    w.u8(kTokenFileVersion);
    w.u32(enc.sample_rate);
    w.u32(enc.fps.num);
    w.u32(enc.fps.den);
    w.u16(static_cast<std::uint16_t>(enc.codebook_size));
    w.u8(static_cast<std::uint8_t>(enc.max_duration));
    w.u8(static_cast<std::uint8_t>(enc.acoustic.layers));
    w.u8(static_cast<std::uint8_t>(enc.semantic.layers));
    w.u8(enc.partition ? 1 : 0);
    w.u64(enc.original_len);
    w.u32(static_cast<std::uint32_t>(frames));
    w.u64(enc.fingerprint);
    for (const CodeGrid * g : {&enc.acoustic, &enc.semantic}) {
        for (std::uint32_t c : g->codes) {
            w.u16(static_cast<std::uint16_t>(c));
        }
    }
    if (enc.partition) {
        for (std::uint32_t d : enc.partition->durations) {
            w.u8(static_cast<std::uint8_t>(d));
        }
    }
    return w.take();
}

EncodedAudio read_tokens(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    expect_magic(r, "HTOK", Errc::NotATokenFile);
    expect_version(r, kTokenFileVersion);

    EncodedAudio enc;
    enc.sample_rate = r.u32();
    enc.fps.num = r.u32();
    const std::uint64_t den_at = r.offset();
    enc.fps.den = r.u32();
    if (enc.fps.den == 0 || enc.fps.num == 0) {
        throw Error(Errc::CorruptFile, "zero frame rate component", den_at);
    }
    const std::uint64_t k_at = r.offset();
    enc.codebook_size = r.u16();
    if (enc.codebook_size == 0) {
        throw Error(Errc::CorruptFile, "K = 0", k_at);
    }
    const std::uint64_t dmax_at = r.offset();
    enc.max_duration = r.u8();
    const std::uint64_t nq_at = r.offset();
    const std::size_t nq_a = r.u8();
    const std::size_t nq_s = r.u8();
    if (nq_a == 0 || nq_s == 0) {
        throw Error(Errc::CorruptFile, "zero layer count", nq_at);
    }
    const std::uint64_t dyn_at = r.offset();
    const std::uint8_t dynamic = r.u8();
    if (dynamic > 1) {
        throw Error(Errc::CorruptFile, "dynamic flag must be 0 or 1", dyn_at);
    }
    if (enc.max_duration == 0 || (dynamic == 0 && enc.max_duration != 1)) {
        throw Error(Errc::CorruptFile, "d_max inconsistent with dynamic flag", dmax_at);
    }
    if (static_cast<std::uint64_t>(enc.codebook_size) * enc.max_duration > 65536) {
        throw Error(Errc::CorruptFile, "K * d_max exceeds the 16-bit code cell", dmax_at);
    }
    enc.original_len = r.u64();
    const std::uint64_t t_at = r.offset();
    const std::size_t frames = r.u32();
    if (frames == 0) {
        throw Error(Errc::CorruptFile, "T must be >= 1", t_at);
    }
    enc.fingerprint = r.u64();
    if (dynamic) {
        enc.partition = SegmentPartition{};
    }

    const std::uint64_t payload = (nq_a + nq_s) * frames * 2 + (dynamic ? frames : 0);
    if (r.remaining() < payload) {
        throw Error(Errc::CorruptFile, "payload truncated: need " + std::to_string(payload) + " bytes, have " +
                                           std::to_string(r.remaining()),
                    r.offset() + r.remaining());
    }

    auto read_grid = [&](Stream s, std::size_t layers) {
        CodeGrid g(s, layers, frames);
        for (std::size_t l = 0; l < layers; ++l) {
            const std::uint32_t limit = code_limit(enc, l);
            for (std::size_t t = 0; t < frames; ++t) {
                const std::uint64_t at = r.offset();
                const std::uint32_t c = r.u16();
                if (c >= limit) {
                    throw Error(Errc::CodeOutOfRange, "code " + std::to_string(c) + " >= " + std::to_string(limit), at);
                }
                g.at(l, t) = c;
            }
        }
        return g;
    };
    enc.acoustic = read_grid(Stream::Acoustic, nq_a);
    enc.semantic = read_grid(Stream::Semantic, nq_s);

    if (dynamic) {
        enc.partition->durations.resize(frames);
        for (std::size_t t = 0; t < frames; ++t) {
            const std::uint64_t at = r.offset();
            const std::uint32_t d = r.u8();
            if (d == 0 || d > enc.max_duration) {
                throw Error(Errc::CorruptFile, "segment duration " + std::to_string(d) + " outside [1, d_max]", at);
            }
            for (const CodeGrid * g : {&enc.acoustic, &enc.semantic}) {
                if (g->at(0, t) / enc.codebook_size + 1 != d) {
                    throw Error(Errc::CorruptFile, "duration disagrees with the layer-0 duration code", at);
                }
            }
            enc.partition->durations[t] = d;
        }
    }
    expect_end(r);
    return enc;
}

std::vector<std::uint8_t> write_codebooks(const RvqStack & stack) {
    if (!stack.trained() || stack.num_layers() > 255 || stack.codebook_size() > 65535 || stack.dim() > 65535 ||
        stack.dim() == 0) {
        throw Error(Errc::InvalidConfig, "codebook stack shape does not fit the HCBK header");
    }
    ByteWriter w;
    w.bytes("HCBK");
    w.u8(kCodebookFileVersion);
    w.u8(static_cast<std::uint8_t>(stack.stream));
    w.u8(static_cast<std::uint8_t>(stack.num_layers()));
    w.u16(static_cast<std::uint16_t>(stack.codebook_size()));
    w.u16(static_cast<std::uint16_t>(stack.dim()));
    for (const Codebook & cb : stack.layers) {
        if (cb.size() != stack.codebook_size() || cb.dim() != stack.dim()) {
            throw Error(Errc::ShapeMismatch, "layers of one stack must share K and D");
        }
        for (float v : cb.entries()) {
            w.f32(v);
        }
    }
    return w.take();
}

RvqStack read_codebooks(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    expect_magic(r, "HCBK", Errc::CorruptFile);
    expect_version(r, kCodebookFileVersion);
    const std::uint64_t stream_at = r.offset();
    const std::uint8_t stream = r.u8();
    if (stream > 1) {
        throw Error(Errc::CorruptFile, "unknown stream tag " + std::to_string(stream), stream_at);
    }
    const std::uint64_t shape_at = r.offset();
    const std::size_t nq = r.u8();
    const std::size_t k = r.u16();
    const std::size_t dim = r.u16();
    if (nq == 0 || k == 0 || dim == 0) {
        throw Error(Errc::CorruptFile, "zero Nq, K or D", shape_at);
    }
    const std::uint64_t payload = static_cast<std::uint64_t>(nq) * k * dim * 4;
    if (r.remaining() != payload) {
        throw Error(Errc::CorruptFile, "payload is " + std::to_string(r.remaining()) + " bytes, header implies " +
                                           std::to_string(payload),
                    r.remaining() < payload ? r.offset() + r.remaining() : r.offset() + payload);
    }
    RvqStack stack;
    stack.stream = static_cast<Stream>(stream);
    for (std::size_t l = 0; l < nq; ++l) {
        Codebook cb(k, dim);
        for (float & v : cb.entries()) {
            const std::uint64_t at = r.offset();
            v = r.f32();
            if (!std::isfinite(v)) {
                throw Error(Errc::CorruptFile, "non-finite centroid value", at);
            }
        }
        stack.layers.push_back(std::move(cb));
    }
    return stack;
}

std::vector<std::uint8_t> write_features(const FeatureMatrix & f) {
    if (f.frames() == 0 || f.frames() > std::numeric_limits<std::uint32_t>::max() || f.dims() == 0 ||
        f.dims() > 65535 || f.fps().den == 0) {
        throw Error(Errc::InvalidConfig, "feature matrix shape does not fit the HFEA header");
    }
    ByteWriter w;
    w.bytes("HFEA");
    w.u8(kFeatureFileVersion);
    w.u32(static_cast<std::uint32_t>(f.frames()));
    w.u16(static_cast<std::uint16_t>(f.dims()));
    w.u32(f.fps().num);
    w.u32(f.fps().den);
    for (double v : f.data()) {
        const float x = static_cast<float>(v);
        if (!std::isfinite(x)) {
            throw Error(Errc::InvalidConfig, "non-finite feature value");
        }
        w.f32(x);
    }
    return w.take();
}

FeatureMatrix read_features(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    expect_magic(r, "HFEA", Errc::CorruptFile);
    expect_version(r, kFeatureFileVersion);
    const std::uint64_t shape_at = r.offset();
    const std::size_t frames = r.u32();
    const std::size_t dims = r.u16();
    if (frames == 0 || dims == 0) {
        throw Error(Errc::CorruptFile, "zero T or D", shape_at);
    }
    const std::uint64_t fps_at = r.offset();
    const std::uint32_t num = r.u32();
    const std::uint32_t den = r.u32();
    if (num == 0 || den == 0) {
        throw Error(Errc::CorruptFile, "zero frame rate component", fps_at);
    }
    const std::uint64_t payload = static_cast<std::uint64_t>(frames) * dims * 4;
    if (r.remaining() != payload) {
        throw Error(Errc::CorruptFile, "payload is " + std::to_string(r.remaining()) + " bytes, header implies " +
                                           std::to_string(payload),
                    r.remaining() < payload ? r.offset() + r.remaining() : r.offset() + payload);
    }
    FeatureMatrix f(frames, dims, Rational{num, den}, FeatureKind::SemanticExternal);
    for (double & v : f.data()) {
        const std::uint64_t at = r.offset();
        const float x = r.f32();
        if (!std::isfinite(x)) {
            throw Error(Errc::CorruptFile, "non-finite feature value", at);
        }
        v = x;
    }
    return f;
}

void save_tokens(const std::filesystem::path & path, const EncodedAudio & enc) {
    write_file_bytes(path, write_tokens(enc));
}

EncodedAudio load_tokens(const std::filesystem::path & path) {
    return read_tokens(read_file_bytes(path));
}

void save_codebooks(const std::filesystem::path & path, const RvqStack & stack) {
    write_file_bytes(path, write_codebooks(stack));
}

RvqStack load_codebooks(const std::filesystem::path & path) {
    return read_codebooks(read_file_bytes(path));
}

void save_features(const std::filesystem::path & path, const FeatureMatrix & f) {
    write_file_bytes(path, write_features(f));
}

FeatureMatrix load_features(const std::filesystem::path & path) {
    return read_features(read_file_bytes(path));
}

} // namespace hcodec
