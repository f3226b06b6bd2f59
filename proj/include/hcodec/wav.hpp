#pragma once

#include "hcodec/types.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace hcodec {

// Reads RIFF/WAVE with 16-bit PCM or 32-bit float samples. Multi-channel
// input is averaged to mono with a logged warning.
Waveform read_wav(const std::filesystem::path & path);
Waveform parse_wav(std::span<const std::uint8_t> bytes);

// Writes 16-bit PCM little-endian mono; samples are clamped to [-1, 1].
void write_wav(const std::filesystem::path & path, const Waveform & w);
std::vector<std::uint8_t> encode_wav(const Waveform & w);

} // namespace hcodec
