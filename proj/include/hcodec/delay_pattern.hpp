#pragma once

#include "hcodec/quantizer.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace hcodec {

// L x (T + L - 1) layout where row l is shifted right by l steps; every
// other cell holds `pad`.
struct DelayedGrid {
    Stream stream = Stream::Acoustic;
    std::size_t layers = 0;
    std::size_t width = 0;
    std::uint32_t pad = 0;
    std::vector<std::uint32_t> cells;

    std::uint32_t & at(std::size_t layer, std::size_t col) { return cells[layer * width + col]; }
    std::uint32_t at(std::size_t layer, std::size_t col) const { return cells[layer * width + col]; }
    std::size_t source_frames() const { return width + 1 - layers; }

    friend bool operator==(const DelayedGrid &, const DelayedGrid &) = default;
};

// Reserved PAD id, one past the largest duration-carrying code.
inline std::uint32_t pad_id(std::uint32_t codebook_size, std::uint32_t max_duration) {
    return codebook_size * max_duration;
}

DelayedGrid apply_delay(const CodeGrid & grid, std::uint32_t pad);
// Throws InvalidDelayLayout unless PAD sits exactly where apply_delay puts it.
CodeGrid remove_delay(const DelayedGrid & delayed);

// Both streams, column by column: acoustic rows then semantic rows. The
// shallower stream is padded at the end to the common width.
std::vector<std::uint16_t> flatten_dual(const DelayedGrid & acoustic, const DelayedGrid & semantic);
std::pair<DelayedGrid, DelayedGrid> unflatten_dual(std::span<const std::uint16_t> seq, std::size_t acoustic_layers,
                                                   std::size_t semantic_layers, std::uint32_t pad);

std::vector<std::uint8_t> encode_u16_stream(std::span<const std::uint16_t> seq);
std::vector<std::uint16_t> decode_u16_stream(std::span<const std::uint8_t> bytes);

} // namespace hcodec
