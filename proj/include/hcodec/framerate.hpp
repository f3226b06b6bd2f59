#pragma once

#include "hcodec/types.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hcodec {

// Similarity-driven segmentation. A frame joins the running segment when its
// cosine similarity to the previous frame is strictly above `threshold` and
// the segment is shorter than `max_duration`.
struct AggregationConfig {
    double threshold = 0.6;
    std::size_t max_duration = 8;
    // Half-width of the moving average applied after de-aggregation.
    std::size_t window = 0;

    void validate() const;
};

struct SegmentPartition {
    std::vector<std::uint32_t> durations;

    std::size_t segments() const { return durations.size(); }
    std::size_t total() const;
    // Throws InvalidConfig if any duration is outside [1, max_duration].
    void validate(std::size_t max_duration) const;

    friend bool operator==(const SegmentPartition &, const SegmentPartition &) = default;
};

struct DurationCode {
    std::uint32_t value = 0;
    friend bool operator==(const DurationCode &, const DurationCode &) = default;
};

struct CodeWithDuration {
    std::uint32_t code = 0;
    std::uint32_t duration = 1;
    friend bool operator==(const CodeWithDuration &, const CodeWithDuration &) = default;
};

// Cosine similarity; bitwise-identical frames score 1 (including two zero
// frames), any other pair involving a zero-norm frame scores 0.
double frame_similarity(std::span<const double> a, std::span<const double> b);

SegmentPartition segment_by_similarity(const FeatureMatrix & semantic, const AggregationConfig & cfg);
// Same scan from precomputed adjacent similarities (T = sims.size() + 1).
SegmentPartition segment_from_similarities(std::span<const double> adjacent, const AggregationConfig & cfg);

// One frame per segment: softmax(frame . segment_mean)-weighted combination.
FeatureMatrix aggregate(const FeatureMatrix & features, const SegmentPartition & part);

// Repeat each segment frame d_i times, then smooth with a centered moving
// average of half-width `window` (truncated at the sequence ends).
FeatureMatrix deaggregate(const FeatureMatrix & features, const SegmentPartition & part, std::size_t window = 0);

// (d - 1) * K + c
DurationCode encode_duration(std::uint32_t code, std::uint32_t duration, std::uint32_t codebook_size,
                             std::uint32_t max_duration);
// d = floor(v / K) + 1, c = v - (d - 1) * K
CodeWithDuration decode_duration(DurationCode v, std::uint32_t codebook_size, std::uint32_t max_duration);

// segments per second of audio covered by the partition
double effective_fps(const SegmentPartition & part, Rational nominal_fps);

} // namespace hcodec
