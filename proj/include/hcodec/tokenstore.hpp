#pragma once

#include "hcodec/dual_codec.hpp"
#include "hcodec/quantizer.hpp"
#include "hcodec/types.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace hcodec {

// All formats are little-endian. Readers validate the magic and version
// before touching the payload and report failures with a byte offset.
//
// HTOK v1 header (43 bytes):
//   "HTOK" | version u8 | sample_rate u32 | fps num u32 | fps den u32 | K u16 |
//   d_max u8 | nq_acoustic u8 | nq_semantic u8 | dynamic u8 |
//   original_len u64 | T u32 | codec fingerprint u64
// payload: acoustic codes u16 [nq_acoustic][T], semantic codes u16
// [nq_semantic][T], then T u8 segment durations when dynamic.
inline constexpr std::uint8_t kTokenFileVersion = 1;
inline constexpr std::size_t kTokenHeaderSize = 43;

// HCBK: "HCBK" | version u8 | stream u8 | Nq u8 | K u16 | D u16 | f32 [Nq][K][D]
inline constexpr std::uint8_t kCodebookFileVersion = 1;

// HFEA: "HFEA" | version u8 | T u32 | D u16 | fps num u32 | fps den u32 | f32 [T][D]
inline constexpr std::uint8_t kFeatureFileVersion = 1;
inline constexpr std::size_t kFeatureHeaderSize = 19;

std::vector<std::uint8_t> write_tokens(const EncodedAudio & enc);
EncodedAudio read_tokens(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> write_codebooks(const RvqStack & stack);
RvqStack read_codebooks(std::span<const std::uint8_t> bytes);

// Values are narrowed to f32 on write.
std::vector<std::uint8_t> write_features(const FeatureMatrix & f);
FeatureMatrix read_features(std::span<const std::uint8_t> bytes);

void save_tokens(const std::filesystem::path & path, const EncodedAudio & enc);
EncodedAudio load_tokens(const std::filesystem::path & path);
void save_codebooks(const std::filesystem::path & path, const RvqStack & stack);
RvqStack load_codebooks(const std::filesystem::path & path);
void save_features(const std::filesystem::path & path, const FeatureMatrix & f);
FeatureMatrix load_features(const std::filesystem::path & path);

} // namespace hcodec
