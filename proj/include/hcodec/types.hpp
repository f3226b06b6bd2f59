#pragma once

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string_view>
#include <vector>

namespace hcodec {

// Exact frame rates. 48000/960 = 50 and 50/8 = 25/4 stay exact.
struct Rational {
    std::uint32_t num = 0;
    std::uint32_t den = 1;

    static Rational make(std::uint64_t num, std::uint64_t den);

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    friend bool operator==(const Rational &, const Rational &) = default;
};

struct Waveform {
    std::vector<double> samples;
    std::uint32_t sample_rate = 16000;

    std::size_t size() const { return samples.size(); }
    double seconds() const { return static_cast<double>(samples.size()) / sample_rate; }
};

enum class FeatureKind : std::uint8_t {
    AcousticMagPhase = 0,
    SemanticProxy = 1,
    SemanticExternal = 2,
    Mel = 3,
    TextEmbedding = 4,
    // real parts then imaginary parts of the same bins
    AcousticComplex = 5,
};

std::string_view feature_kind_name(FeatureKind kind);

// Row-major T x D matrix of frame features.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    FeatureMatrix(std::size_t frames, std::size_t dims, Rational fps, FeatureKind kind);

    std::size_t frames() const { return frames_; }
    std::size_t dims() const { return dims_; }
    Rational fps() const { return fps_; }
    FeatureKind kind() const { return kind_; }
    void set_fps(Rational fps) { fps_ = fps; }
    void set_kind(FeatureKind kind) { kind_ = kind; }

    std::span<double> row(std::size_t t) { return {data_.data() + t * dims_, dims_}; }
    std::span<const double> row(std::size_t t) const { return {data_.data() + t * dims_, dims_}; }
    double & at(std::size_t t, std::size_t d) { return data_[t * dims_ + d]; }
    double at(std::size_t t, std::size_t d) const { return data_[t * dims_ + d]; }

    std::vector<double> & data() { return data_; }
    const std::vector<double> & data() const { return data_; }

    bool all_finite() const;

    friend bool operator==(const FeatureMatrix &, const FeatureMatrix &) = default;

private:
    std::size_t frames_ = 0;
    std::size_t dims_ = 0;
    Rational fps_{};
    FeatureKind kind_ = FeatureKind::AcousticMagPhase;
    std::vector<double> data_;
};

} // namespace hcodec
