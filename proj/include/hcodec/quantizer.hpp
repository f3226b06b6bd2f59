#pragma once

#include "hcodec/types.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hcodec {

enum class Stream : std::uint8_t { Acoustic = 0, Semantic = 1 };

std::string_view stream_name(Stream s);

// K x D centroid table. Entries are stored as f32, which is also their
// on-disk precision, so persisted books reload bit-exactly.
class Codebook {
public:
    Codebook() = default;
    Codebook(std::size_t size, std::size_t dim);

    std::size_t size() const { return size_; }
    std::size_t dim() const { return dim_; }

    std::span<const float> entry(std::size_t k) const { return {entries_.data() + k * dim_, dim_}; }
    std::span<float> entry(std::size_t k) { return {entries_.data() + k * dim_, dim_}; }
    const std::vector<float> & entries() const { return entries_; }
    std::vector<float> & entries() { return entries_; }

    // Assignment mass per entry from the last training pass; sums to the
    // number of training frames. Not persisted.
    const std::vector<double> & usage() const { return usage_; }
    std::vector<double> & usage() { return usage_; }

    // Index of the nearest entry under squared Euclidean distance; ties go to
    // the lowest index.
    std::size_t nearest(std::span<const double> x, double * distance = nullptr) const;

    friend bool operator==(const Codebook & a, const Codebook & b) {
        return a.size_ == b.size_ && a.dim_ == b.dim_ && a.entries_ == b.entries_;
    }

private:
    std::size_t size_ = 0;
    std::size_t dim_ = 0;
    std::vector<float> entries_;
    std::vector<double> usage_;
};

struct RvqStack {
    Stream stream = Stream::Acoustic;
    std::vector<Codebook> layers;

    bool trained() const { return !layers.empty(); }
    std::size_t num_layers() const { return layers.size(); }
    std::size_t dim() const { return layers.empty() ? 0 : layers.front().dim(); }
    std::size_t codebook_size() const { return layers.empty() ? 0 : layers.front().size(); }

    // FNV-1a over stream tag, shape and raw centroid bits.
    std::uint64_t fingerprint() const;

    friend bool operator==(const RvqStack &, const RvqStack &) = default;
};

// Nq x T code matrix, layer-major.
struct CodeGrid {
    Stream stream = Stream::Acoustic;
    std::size_t layers = 0;
    std::size_t frames = 0;
    std::vector<std::uint32_t> codes;

    CodeGrid() = default;
    CodeGrid(Stream s, std::size_t n_layers, std::size_t n_frames)
        : stream(s), layers(n_layers), frames(n_frames), codes(n_layers * n_frames, 0) {}

    std::uint32_t & at(std::size_t layer, std::size_t t) { return codes[layer * frames + t]; }
    std::uint32_t at(std::size_t layer, std::size_t t) const { return codes[layer * frames + t]; }

    friend bool operator==(const CodeGrid &, const CodeGrid &) = default;
};

struct RvqTrainOptions {
    std::size_t num_layers = 4;
    std::size_t codebook_size = 256;
    std::uint64_t seed = 0;
    std::size_t iters = 25;
    // EMA refinement after Lloyd; 0 passes disables it.
    std::size_t ema_passes = 0;
    double ema_decay = 0.99;
    // Layers after the first pin entry 0 to the zero vector, which makes the
    // per-frame residual energy non-increasing in depth for any input.
    bool zero_code_in_residual_layers = true;
    // Same pin on layer 0: an all-zero input encodes to zero exactly and the
    // first layer never raises the energy above the input's.
    bool zero_code_in_first_layer = true;
};

struct RvqTrainReport {
    // mean squared norm of the residual after 0..Nq layers on the training set
    std::vector<double> residual_energy;
    std::vector<std::size_t> reseeded_per_layer;
};

RvqStack train_rvq(const FeatureMatrix & features, const RvqTrainOptions & opts, Stream stream = Stream::Acoustic,
                   RvqTrainReport * report = nullptr);

// Encode with the first `max_layers` layers (all when 0).
CodeGrid rvq_encode(const RvqStack & stack, const FeatureMatrix & features, std::size_t max_layers = 0);

// Sum of selected centroids across the grid's layers (a prefix of the stack).
FeatureMatrix rvq_decode(const RvqStack & stack, const CodeGrid & codes, Rational fps = {1, 1},
                         FeatureKind kind = FeatureKind::AcousticMagPhase);

// T x (Nq+1) squared residual norms: column l is the energy after l layers.
std::vector<std::vector<double>> rvq_residual_energies(const RvqStack & stack, const FeatureMatrix & features);

} // namespace hcodec
