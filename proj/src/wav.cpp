#include "hcodec/wav.hpp"

#include "hcodec/byte_io.hpp"
#include "hcodec/error.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

namespace hcodec {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path & path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::IoError, "cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path & path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(Errc::IoError, "cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error(Errc::IoError, "short write to " + path.string());
    }
}

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

} // namespace

Waveform parse_wav(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    if (r.bytes(4) != "RIFF") {
        throw Error(Errc::UnsupportedFormat, "missing RIFF tag", 0);
    }
    r.u32();
    if (r.bytes(4) != "WAVE") {
        throw Error(Errc::UnsupportedFormat, "missing WAVE tag", 8);
    }

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t sample_rate = 0;
    bool have_fmt = false;
    while (r.remaining() >= 8) {
        const std::uint64_t chunk_at = r.offset();
        const std::string id = r.bytes(4);
        const std::uint32_t size = r.u32();
        if (id == "fmt ") {
            if (size < 16) {
                throw Error(Errc::CorruptFile, "fmt chunk too small", chunk_at);
            }
            format = r.u16();
            channels = r.u16();
            sample_rate = r.u32();
            r.u32();
            r.u16();
            bits = r.u16();
            std::size_t rest = size - 16;
            if (format == kFormatExtensible && rest >= 10) {
                r.u16();
                r.u16();
                r.u32();
                format = r.u16();
                rest -= 10;
            }
            r.skip(rest + (size & 1));
            have_fmt = true;
        } else if (id == "data") {
            if (!have_fmt) {
                throw Error(Errc::CorruptFile, "data chunk before fmt chunk", chunk_at);
            }
            if (channels == 0 || sample_rate == 0) {
                throw Error(Errc::CorruptFile, "zero channels or sample rate", chunk_at);
            }
            const bool pcm16 = format == kFormatPcm && bits == 16;
            const bool f32 = format == kFormatFloat && bits == 32;
            if (!pcm16 && !f32) {
                throw Error(Errc::UnsupportedFormat, "only 16-bit PCM and 32-bit float WAV are supported", chunk_at);
            }
            const std::size_t bytes_per_frame = static_cast<std::size_t>(channels) * (bits / 8);
            const std::size_t avail = std::min<std::size_t>(size, r.remaining());
            const std::size_t n = avail / bytes_per_frame;
            if (n == 0) {
                throw Error(Errc::EmptyInput, "WAV has no samples", r.offset());
            }
            if (channels > 1) {
                spdlog::warn("averaging {} channels to mono", channels);
            }
            Waveform w;
            w.sample_rate = sample_rate;
            w.samples.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                double acc = 0.0;
                for (std::uint16_t c = 0; c < channels; ++c) {
                    const std::uint64_t at = r.offset();
                    const double v = pcm16 ? r.i16() / 32768.0 : static_cast<double>(r.f32());
                    if (!std::isfinite(v)) {
                        throw Error(Errc::CorruptFile, "non-finite sample", at);
                    }
                    acc += v;
                }
                w.samples[i] = acc / channels;
            }
            return w;
        } else {
            r.skip(std::min<std::size_t>(size + (size & 1), r.remaining()));
        }
    }
    throw Error(Errc::CorruptFile, "no data chunk", r.offset());
}

Waveform read_wav(const std::filesystem::path & path) {
    const auto bytes = read_file_bytes(path);
    return parse_wav(bytes);
}

std::vector<std::uint8_t> encode_wav(const Waveform & w) {
    ByteWriter out;
    const std::uint32_t data_bytes = static_cast<std::uint32_t>(w.samples.size() * 2);
    out.bytes("RIFF");
    out.u32(36 + data_bytes);
    out.bytes("WAVE");
    out.bytes("fmt ");
    out.u32(16);
    out.u16(kFormatPcm);
    out.u16(1);
    out.u32(w.sample_rate);
    out.u32(w.sample_rate * 2);
    out.u16(2);
    out.u16(16);
    out.bytes("data");
    out.u32(data_bytes);
    for (double s : w.samples) {
        const double c = std::clamp(std::isfinite(s) ? s : 0.0, -1.0, 1.0);
        // same 1/32768 scale as the reader, so PCM16 files survive read/write unchanged
        out.i16(static_cast<std::int16_t>(std::clamp<long>(std::lround(c * 32768.0), -32768, 32767)));
    }
    return out.take();
}

void write_wav(const std::filesystem::path & path, const Waveform & w) {
    const auto bytes = encode_wav(w);
    write_file_bytes(path, bytes);
}

} // namespace hcodec
