#include "hcodec/types.hpp"

#include "hcodec/error.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace hcodec {

Rational Rational::make(std::uint64_t num, std::uint64_t den) {
    if (den == 0) {
        throw Error(Errc::InvalidConfig, "rational with zero denominator");
    }
    const std::uint64_t g = std::gcd(num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
    if (num > std::numeric_limits<std::uint32_t>::max() || den > std::numeric_limits<std::uint32_t>::max()) {
        throw Error(Errc::InvalidConfig, "frame rate " + std::to_string(num) + "/" + std::to_string(den) +
                                             " does not fit 32-bit rational");
    }
    return {static_cast<std::uint32_t>(num), static_cast<std::uint32_t>(den)};
}

std::string_view feature_kind_name(FeatureKind kind) {
    switch (kind) {
        case FeatureKind::AcousticMagPhase: return "acoustic_magphase";
        case FeatureKind::SemanticProxy:    return "semantic_proxy";
        case FeatureKind::SemanticExternal: return "semantic_external";
        case FeatureKind::TextEmbedding:    return "text_embedding";
        case FeatureKind::AcousticComplex:  return "acoustic_complex";
        case FeatureKind::Mel:              return "mel";
    }
    return "unknown";
}

FeatureMatrix::FeatureMatrix(std::size_t frames, std::size_t dims, Rational fps, FeatureKind kind)
    : frames_(frames), dims_(dims), fps_(fps), kind_(kind), data_(frames * dims, 0.0) {}

bool FeatureMatrix::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

} // namespace hcodec
