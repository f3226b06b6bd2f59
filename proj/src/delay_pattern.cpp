#include "hcodec/delay_pattern.hpp"

#include "hcodec/byte_io.hpp"
#include "hcodec/error.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace hcodec {

DelayedGrid apply_delay(const CodeGrid & grid, std::uint32_t pad) {
    if (grid.layers == 0 || grid.frames == 0) {
        throw Error(Errc::EmptyInput, "cannot delay an empty code grid");
    }
    DelayedGrid d;
    d.stream = grid.stream;
    d.layers = grid.layers;
    d.width = grid.frames + grid.layers - 1;
    d.pad = pad;
    d.cells.assign(d.layers * d.width, pad);
    for (std::size_t l = 0; l < grid.layers; ++l) {
        for (std::size_t t = 0; t < grid.frames; ++t) {
            const std::uint32_t c = grid.at(l, t);
            if (c == pad) {
                throw Error(Errc::CodeOutOfRange, "code collides with PAD id " + std::to_string(pad));
            }
            d.at(l, t + l) = c;
        }
    }
    return d;
}

CodeGrid remove_delay(const DelayedGrid & delayed) {
    if (delayed.layers == 0 || delayed.width < delayed.layers || delayed.cells.size() != delayed.layers * delayed.width) {
        throw Error(Errc::InvalidDelayLayout, "delayed grid is too narrow or not rectangular");
    }
    const std::size_t frames = delayed.source_frames();
    CodeGrid grid(delayed.stream, delayed.layers, frames);
    for (std::size_t l = 0; l < delayed.layers; ++l) {
        for (std::size_t col = 0; col < delayed.width; ++col) {
            const bool should_pad = col < l || col >= l + frames;
            const bool is_pad = delayed.at(l, col) == delayed.pad;
            if (should_pad != is_pad) {
                throw Error(Errc::InvalidDelayLayout, "row " + std::to_string(l) + " column " + std::to_string(col) +
                                                          (should_pad ? " must be PAD" : " must not be PAD"));
            }
            if (!should_pad) {
                grid.at(l, col - l) = delayed.at(l, col);
            }
        }
    }
    return grid;
}

std::vector<std::uint16_t> flatten_dual(const DelayedGrid & acoustic, const DelayedGrid & semantic) {
    if (acoustic.source_frames() != semantic.source_frames() || acoustic.pad != semantic.pad) {
        throw Error(Errc::ShapeMismatch, "streams disagree on frame count or PAD id");
    }
    if (acoustic.pad > std::numeric_limits<std::uint16_t>::max()) {
        throw Error(Errc::CodeOutOfRange, "PAD id does not fit 16 bits");
    }
    const std::size_t width = std::max(acoustic.width, semantic.width);
    std::vector<std::uint16_t> seq;
    seq.reserve(width * (acoustic.layers + semantic.layers));
    for (std::size_t col = 0; col < width; ++col) {
        for (const DelayedGrid * g : {&acoustic, &semantic}) {
            for (std::size_t l = 0; l < g->layers; ++l) {
                const std::uint32_t v = col < g->width ? g->at(l, col) : g->pad;
                if (v > std::numeric_limits<std::uint16_t>::max()) {
                    throw Error(Errc::CodeOutOfRange, "code " + std::to_string(v) + " does not fit 16 bits");
                }
                seq.push_back(static_cast<std::uint16_t>(v));
            }
        }
    }
    return seq;
}

std::pair<DelayedGrid, DelayedGrid> unflatten_dual(std::span<const std::uint16_t> seq, std::size_t acoustic_layers,
                                                   std::size_t semantic_layers, std::uint32_t pad) {
    const std::size_t rows = acoustic_layers + semantic_layers;
    const std::size_t deepest = std::max(acoustic_layers, semantic_layers);
    if (acoustic_layers == 0 || semantic_layers == 0 || seq.size() % rows != 0 || seq.size() / rows < deepest) {
        throw Error(Errc::InvalidDelayLayout, "sequence length " + std::to_string(seq.size()) +
                                                  " does not match the stream layout");
    }
    const std::size_t width = seq.size() / rows;
    const std::size_t frames = width + 1 - deepest;

    auto make = [&](Stream s, std::size_t layers) {
        DelayedGrid g;
        g.stream = s;
        g.layers = layers;
        g.width = frames + layers - 1;
        g.pad = pad;
        g.cells.assign(layers * g.width, pad);
        return g;
    };
    DelayedGrid a = make(Stream::Acoustic, acoustic_layers);
    DelayedGrid s = make(Stream::Semantic, semantic_layers);
    std::size_t i = 0;
    for (std::size_t col = 0; col < width; ++col) {
        for (DelayedGrid * g : {&a, &s}) {
            for (std::size_t l = 0; l < g->layers; ++l, ++i) {
                if (col < g->width) {
                    g->at(l, col) = seq[i];
                } else if (seq[i] != pad) {
                    throw Error(Errc::InvalidDelayLayout, "non-PAD filler at sequence index " + std::to_string(i));
                }
            }
        }
    }
    return {std::move(a), std::move(s)};
}

std::vector<std::uint8_t> encode_u16_stream(std::span<const std::uint16_t> seq) {
    ByteWriter w;
    for (std::uint16_t v : seq) {
        w.u16(v);
    }
    return w.take();
}

std::vector<std::uint16_t> decode_u16_stream(std::span<const std::uint8_t> bytes) {
    if (bytes.size() % 2 != 0) {
        throw Error(Errc::CorruptFile, "odd byte count in u16 stream", bytes.size() - 1);
    }
    ByteReader r(bytes);
    std::vector<std::uint16_t> seq(bytes.size() / 2);
    for (auto & v : seq) {
        v = r.u16();
    }
    return seq;
}

} // namespace hcodec
