#include "hcodec/framerate.hpp"

#include "hcodec/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hcodec {

void AggregationConfig::validate() const {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw Error(Errc::InvalidConfig, "similarity threshold must lie in (0, 1)");
    }
    if (max_duration < 1 || max_duration > 255) {
        throw Error(Errc::InvalidConfig, "max duration must be in [1, 255]");
    }
}

std::size_t SegmentPartition::total() const {
    std::size_t t = 0;
    for (auto d : durations) {
        t += d;
    }
    return t;
}

void SegmentPartition::validate(std::size_t max_duration) const {
    for (std::size_t i = 0; i < durations.size(); ++i) {
        if (durations[i] < 1 || durations[i] > max_duration) {
            throw Error(Errc::InvalidConfig, "segment " + std::to_string(i) + " has duration " +
                                                 std::to_string(durations[i]) + " outside [1, " +
                                                 std::to_string(max_duration) + "]");
        }
    }
}

double frame_similarity(std::span<const double> a, std::span<const double> b) {
    if (std::equal(a.begin(), a.end(), b.begin(), b.end())) {
        return 1.0;
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
        return 0.0;
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

SegmentPartition segment_from_similarities(std::span<const double> adjacent, const AggregationConfig & cfg) {
    cfg.validate();
    SegmentPartition part;
    std::uint32_t run = 1;
    for (double s : adjacent) {
        if (s > cfg.threshold && run < cfg.max_duration) {
            ++run;
        } else {
            part.durations.push_back(run);
            run = 1;
        }
    }
    part.durations.push_back(run);
    return part;
}

SegmentPartition segment_by_similarity(const FeatureMatrix & semantic, const AggregationConfig & cfg) {
    if (semantic.frames() == 0) {
        throw Error(Errc::EmptyInput, "cannot segment an empty feature matrix");
    }
    std::vector<double> sims(semantic.frames() - 1);
    for (std::size_t t = 0; t + 1 < semantic.frames(); ++t) {
        sims[t] = frame_similarity(semantic.row(t), semantic.row(t + 1));
    }
    return segment_from_similarities(sims, cfg);
}

FeatureMatrix aggregate(const FeatureMatrix & features, const SegmentPartition & part) {
    if (part.total() != features.frames()) {
        throw Error(Errc::ShapeMismatch, "partition covers " + std::to_string(part.total()) + " frames, features have " +
                                             std::to_string(features.frames()));
    }
    const std::size_t dim = features.dims();
    FeatureMatrix out(part.segments(), dim, features.fps(), features.kind());
    std::vector<double> mean(dim), score;
    std::size_t start = 0;
    for (std::size_t s = 0; s < part.segments(); ++s) {
        const std::size_t d = part.durations[s];
        if (d == 0) {
            throw Error(Errc::ShapeMismatch, "zero-length segment " + std::to_string(s));
        }
        auto dst = out.row(s);
        if (d == 1) {
            auto src = features.row(start);
            std::copy(src.begin(), src.end(), dst.begin());
            start += d;
            continue;
        }
        std::fill(mean.begin(), mean.end(), 0.0);
        for (std::size_t j = 0; j < d; ++j) {
            auto f = features.row(start + j);
            for (std::size_t i = 0; i < dim; ++i) {
                mean[i] += f[i];
            }
        }
        for (double & m : mean) {
            m /= static_cast<double>(d);
        }
        score.assign(d, 0.0);
        for (std::size_t j = 0; j < d; ++j) {
            auto f = features.row(start + j);
            for (std::size_t i = 0; i < dim; ++i) {
                score[j] += f[i] * mean[i];
            }
        }
        const double top = *std::max_element(score.begin(), score.end());
        double z = 0.0;
        for (double & v : score) {
            v = std::exp(v - top);
            z += v;
        }
        for (std::size_t j = 0; j < d; ++j) {
            const double w = score[j] / z;
            auto f = features.row(start + j);
            for (std::size_t i = 0; i < dim; ++i) {
                dst[i] += w * f[i];
            }
        }
        start += d;
    }
    return out;
}

FeatureMatrix deaggregate(const FeatureMatrix & features, const SegmentPartition & part, std::size_t window) {
    if (part.segments() != features.frames()) {
        throw Error(Errc::ShapeMismatch, std::to_string(features.frames()) + " frames for " +
                                             std::to_string(part.segments()) + " segments");
    }
    const std::size_t dim = features.dims();
    FeatureMatrix repeated(part.total(), dim, features.fps(), features.kind());
    std::size_t t = 0;
    for (std::size_t s = 0; s < part.segments(); ++s) {
        auto src = features.row(s);
        for (std::uint32_t j = 0; j < part.durations[s]; ++j, ++t) {
            auto dst = repeated.row(t);
            std::copy(src.begin(), src.end(), dst.begin());
        }
    }
    if (window == 0) {
        return repeated;
    }
    FeatureMatrix smoothed(repeated.frames(), dim, features.fps(), features.kind());
    const std::size_t n = repeated.frames();
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= window ? i - window : 0;
        const std::size_t hi = std::min(n - 1, i + window);
        auto dst = smoothed.row(i);
        for (std::size_t j = lo; j <= hi; ++j) {
            auto src = repeated.row(j);
            for (std::size_t k = 0; k < dim; ++k) {
                dst[k] += src[k];
            }
        }
        const double inv = 1.0 / static_cast<double>(hi - lo + 1);
        for (double & v : dst) {
            v *= inv;
        }
    }
    return smoothed;
}

DurationCode encode_duration(std::uint32_t code, std::uint32_t duration, std::uint32_t codebook_size,
                             std::uint32_t max_duration) {
    if (code >= codebook_size) {
        throw Error(Errc::CodeOutOfRange, "code " + std::to_string(code) + " >= K=" + std::to_string(codebook_size));
    }
    if (duration < 1 || duration > max_duration) {
        throw Error(Errc::CodeOutOfRange, "duration " + std::to_string(duration) + " outside [1, " +
                                              std::to_string(max_duration) + "]");
    }
    return {(duration - 1) * codebook_size + code};
}

CodeWithDuration decode_duration(DurationCode v, std::uint32_t codebook_size, std::uint32_t max_duration) {
    if (codebook_size == 0 || static_cast<std::uint64_t>(v.value) >= static_cast<std::uint64_t>(codebook_size) * max_duration) {
        throw Error(Errc::CodeOutOfRange, "duration code " + std::to_string(v.value) + " >= K*d_max");
    }
    const std::uint32_t d = v.value / codebook_size + 1;
    return {v.value - (d - 1) * codebook_size, d};
}

double effective_fps(const SegmentPartition & part, Rational nominal_fps) {
    const std::size_t frames = part.total();
    if (frames == 0) {
        throw Error(Errc::EmptyInput, "empty partition");
    }
    const double seconds = static_cast<double>(frames) / nominal_fps.value();
    return static_cast<double>(part.segments()) / seconds;
}

} // namespace hcodec
