#include "hcodec/quantizer.hpp"

#include "hcodec/error.hpp"
#include "hcodec/rng.hpp"

#include <algorithm>
#include <cstring>
#include <limits>
#include <string>

namespace hcodec {

std::string_view stream_name(Stream s) {
    return s == Stream::Acoustic ? "acoustic" : "semantic";
}

Codebook::Codebook(std::size_t size, std::size_t dim)
    : size_(size), dim_(dim), entries_(size * dim, 0.0f), usage_(size, 0.0) {}

std::size_t Codebook::nearest(std::span<const double> x, double * distance) const {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < size_; ++k) {
        const float * c = entries_.data() + k * dim_;
        double d = 0.0;
        std::size_t i = 0;
        // partial sums only grow, so abandoning at > best never changes the argmin
        for (; i < dim_; ++i) {
            const double diff = x[i] - static_cast<double>(c[i]);
            d += diff * diff;
            if (d > best_d) {
                break;
            }
        }
        if (i == dim_ && d < best_d) {
            best_d = d;
            best = k;
        }
    }
    if (distance != nullptr) {
        *distance = best_d;
    }
    return best;
}

std::uint64_t RvqStack::fingerprint() const {
    std::uint64_t h = fnv1a64("HCBK");
    auto mix = [&h](const void * p, std::size_t n) {
        h = fnv1a64(std::string_view(static_cast<const char *>(p), n), h);
    };
    const std::uint8_t tag = static_cast<std::uint8_t>(stream);
    mix(&tag, 1);
    const std::uint64_t n_layers = layers.size();
    mix(&n_layers, sizeof n_layers);
    for (const Codebook & cb : layers) {
        const std::uint64_t shape[2] = {cb.size(), cb.dim()};
        mix(shape, sizeof shape);
        mix(cb.entries().data(), cb.entries().size() * sizeof(float));
    }
    return h;
}

namespace {

// Lloyd state in double precision; `fixed_zero` pins entry 0 at the origin.
struct KMeans {
    std::size_t k = 0;
    std::size_t dim = 0;
    bool fixed_zero = false;
    std::vector<double> centroids;

    std::size_t nearest(const double * x, double * distance) const {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            const double * mu = centroids.data() + c * dim;
            double d = 0.0;
            std::size_t i = 0;
            for (; i < dim; ++i) {
                const double diff = x[i] - mu[i];
                d += diff * diff;
                if (d > best_d) {
                    break;
                }
            }
            if (i == dim && d < best_d) {
                best_d = d;
                best = c;
            }
        }
        *distance = best_d;
        return best;
    }
};

double squared_distance(const double * a, const double * b, std::size_t dim) {
    double d = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        const double diff = a[i] - b[i];
        d += diff * diff;
    }
    return d;
}

void seed_plus_plus(KMeans & km, const std::vector<double> & data, std::size_t frames, Rng & rng) {
    const std::size_t dim = km.dim;
    std::vector<double> best(frames, std::numeric_limits<double>::infinity());
    std::size_t first = 0;
    if (km.fixed_zero) {
        std::fill(km.centroids.begin(), km.centroids.begin() + dim, 0.0);
        for (std::size_t t = 0; t < frames; ++t) {
            best[t] = squared_distance(data.data() + t * dim, km.centroids.data(), dim);
        }
        first = 1;
    } else {
        const std::size_t pick = rng.below(frames);
        std::copy_n(data.begin() + pick * dim, dim, km.centroids.begin());
        for (std::size_t t = 0; t < frames; ++t) {
            best[t] = squared_distance(data.data() + t * dim, km.centroids.data(), dim);
        }
        first = 1;
    }
    for (std::size_t c = first; c < km.k; ++c) {
        double total = 0.0;
        for (double b : best) {
            total += b;
        }
        std::size_t pick = 0;
        if (total <= 0.0) {
            pick = rng.below(frames);
        } else {
            double target = rng.uniform01() * total;
            pick = frames - 1;
            for (std::size_t t = 0; t < frames; ++t) {
                target -= best[t];
                if (target < 0.0) {
                    pick = t;
                    break;
                }
            }
        }
        double * mu = km.centroids.data() + c * dim;
        std::copy_n(data.begin() + pick * dim, dim, mu);
        for (std::size_t t = 0; t < frames; ++t) {
            best[t] = std::min(best[t], squared_distance(data.data() + t * dim, mu, dim));
        }
    }
}

// Returns the number of dead entries re-seeded over all iterations.
std::size_t lloyd(KMeans & km, const std::vector<double> & data, std::size_t frames, std::size_t iters,
                  std::vector<double> & counts) {
    const std::size_t dim = km.dim;
    const std::size_t first_free = km.fixed_zero ? 1 : 0;
    std::vector<std::size_t> assign(frames, std::numeric_limits<std::size_t>::max());
    std::vector<double> err(frames, 0.0);
    std::vector<double> sums(km.k * dim);
    counts.assign(km.k, 0.0);
    std::size_t reseeded = 0;

    for (std::size_t it = 0; it < iters; ++it) {
        bool changed = false;
        for (std::size_t t = 0; t < frames; ++t) {
            double d = 0.0;
            const std::size_t c = km.nearest(data.data() + t * dim, &d);
            if (c != assign[t]) {
                changed = true;
                assign[t] = c;
            }
            err[t] = d;
        }
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0.0);
        for (std::size_t t = 0; t < frames; ++t) {
            const double * x = data.data() + t * dim;
            double * s = sums.data() + assign[t] * dim;
            for (std::size_t i = 0; i < dim; ++i) {
                s[i] += x[i];
            }
            counts[assign[t]] += 1.0;
        }
        bool any_dead = false;
        for (std::size_t c = first_free; c < km.k; ++c) {
            double * mu = km.centroids.data() + c * dim;
            if (counts[c] > 0.0) {
                for (std::size_t i = 0; i < dim; ++i) {
                    mu[i] = sums[c * dim + i] / counts[c];
                }
                continue;
            }
            // dead entry: move it onto the worst-served frame
            const auto worst = std::max_element(err.begin(), err.end());
            const std::size_t t = static_cast<std::size_t>(worst - err.begin());
            std::copy_n(data.begin() + t * dim, dim, mu);
            *worst = 0.0;
            any_dead = true;
            ++reseeded;
        }
        if (!changed && !any_dead) {
            break;
        }
    }
    return reseeded;
}

void ema_refine(KMeans & km, const std::vector<double> & data, std::size_t frames, std::size_t passes, double decay,
                std::vector<double> & counts) {
    const std::size_t dim = km.dim;
    const std::size_t first_free = km.fixed_zero ? 1 : 0;
    std::vector<double> mass(km.k * dim);
    for (std::size_t c = 0; c < km.k; ++c) {
        for (std::size_t i = 0; i < dim; ++i) {
            mass[c * dim + i] = km.centroids[c * dim + i] * counts[c];
        }
    }
    std::vector<double> batch_sum(km.k * dim);
    std::vector<double> batch_count(km.k);
    for (std::size_t p = 0; p < passes; ++p) {
        std::fill(batch_sum.begin(), batch_sum.end(), 0.0);
        std::fill(batch_count.begin(), batch_count.end(), 0.0);
        for (std::size_t t = 0; t < frames; ++t) {
            double d = 0.0;
            const double * x = data.data() + t * dim;
            const std::size_t c = km.nearest(x, &d);
            batch_count[c] += 1.0;
            for (std::size_t i = 0; i < dim; ++i) {
                batch_sum[c * dim + i] += x[i];
            }
        }
        for (std::size_t c = 0; c < km.k; ++c) {
            counts[c] = decay * counts[c] + (1.0 - decay) * batch_count[c];
            for (std::size_t i = 0; i < dim; ++i) {
                mass[c * dim + i] = decay * mass[c * dim + i] + (1.0 - decay) * batch_sum[c * dim + i];
            }
            if (c >= first_free && counts[c] > 0.0) {
                for (std::size_t i = 0; i < dim; ++i) {
                    km.centroids[c * dim + i] = mass[c * dim + i] / counts[c];
                }
            }
        }
    }
}

} // namespace

RvqStack train_rvq(const FeatureMatrix & features, const RvqTrainOptions & opts, Stream stream, RvqTrainReport * report) {
    if (opts.num_layers == 0) {
        throw Error(Errc::InvalidConfig, "RVQ needs at least one layer");
    }
    if (opts.codebook_size == 0 || opts.codebook_size > 65535) {
        throw Error(Errc::InvalidConfig, "codebook size must be in [1, 65535]");
    }
    const std::size_t frames = features.frames();
    const std::size_t dim = features.dims();
    if (frames < opts.codebook_size) {
        throw Error(Errc::InsufficientData, std::to_string(frames) + " frames for " +
                                                std::to_string(opts.codebook_size) + " centroids");
    }
    if (dim == 0 || !features.all_finite()) {
        throw Error(Errc::InvalidConfig, "training features must have finite entries and D >= 1");
    }

    Rng rng(derive_seed(opts.seed, static_cast<std::uint64_t>(stream)));
    std::vector<double> residual = features.data();
    RvqStack stack;
    stack.stream = stream;

    auto mean_energy = [&]() {
        double e = 0.0;
        for (double v : residual) {
            e += v * v;
        }
        return e / static_cast<double>(frames);
    };
    if (report != nullptr) {
        report->residual_energy.assign(1, mean_energy());
        report->reseeded_per_layer.clear();
    }

    for (std::size_t layer = 0; layer < opts.num_layers; ++layer) {
        KMeans km;
        km.k = opts.codebook_size;
        km.dim = dim;
        km.fixed_zero = (layer > 0 ? opts.zero_code_in_residual_layers : opts.zero_code_in_first_layer) && km.k >= 2;
        km.centroids.assign(km.k * dim, 0.0);

        seed_plus_plus(km, residual, frames, rng);
        std::vector<double> counts;
        const std::size_t reseeded = lloyd(km, residual, frames, std::max<std::size_t>(opts.iters, 1), counts);
        if (opts.ema_passes > 0) {
            ema_refine(km, residual, frames, opts.ema_passes, opts.ema_decay, counts);
        }

        Codebook cb(km.k, dim);
        for (std::size_t i = 0; i < km.centroids.size(); ++i) {
            cb.entries()[i] = static_cast<float>(km.centroids[i]);
        }
        if (opts.ema_passes > 0) {
            cb.usage() = counts;
        }
        std::vector<double> final_counts(km.k, 0.0);
        for (std::size_t t = 0; t < frames; ++t) {
            std::span<double> r(residual.data() + t * dim, dim);
            const std::size_t c = cb.nearest(r);
            final_counts[c] += 1.0;
            auto e = cb.entry(c);
            for (std::size_t i = 0; i < dim; ++i) {
                r[i] -= static_cast<double>(e[i]);
            }
        }
        if (opts.ema_passes == 0) {
            cb.usage() = std::move(final_counts);
        }
        stack.layers.push_back(std::move(cb));
        if (report != nullptr) {
            report->residual_energy.push_back(mean_energy());
            report->reseeded_per_layer.push_back(reseeded);
        }
    }
    return stack;
}

namespace {

void check_stack(const RvqStack & stack) {
    if (!stack.trained()) {
        throw Error(Errc::NotTrained, std::string(stream_name(stack.stream)) + " stack has no layers");
    }
}

} // namespace

CodeGrid rvq_encode(const RvqStack & stack, const FeatureMatrix & features, std::size_t max_layers) {
    check_stack(stack);
    if (features.dims() != stack.dim()) {
        throw Error(Errc::ShapeMismatch, "feature dim " + std::to_string(features.dims()) + " != codebook dim " +
                                             std::to_string(stack.dim()));
    }
    const std::size_t n_layers = max_layers == 0 ? stack.num_layers() : std::min(max_layers, stack.num_layers());
    CodeGrid grid(stack.stream, n_layers, features.frames());
    std::vector<double> r(features.dims());
    for (std::size_t t = 0; t < features.frames(); ++t) {
        auto x = features.row(t);
        std::copy(x.begin(), x.end(), r.begin());
        for (std::size_t l = 0; l < n_layers; ++l) {
            const Codebook & cb = stack.layers[l];
            const std::size_t c = cb.nearest(r);
            grid.at(l, t) = static_cast<std::uint32_t>(c);
            auto e = cb.entry(c);
            for (std::size_t i = 0; i < r.size(); ++i) {
                r[i] -= static_cast<double>(e[i]);
            }
        }
    }
    return grid;
}

FeatureMatrix rvq_decode(const RvqStack & stack, const CodeGrid & codes, Rational fps, FeatureKind kind) {
    check_stack(stack);
    if (codes.layers > stack.num_layers() || codes.codes.size() != codes.layers * codes.frames) {
        throw Error(Errc::ShapeMismatch, "code grid has " + std::to_string(codes.layers) + " layers, stack has " +
                                             std::to_string(stack.num_layers()));
    }
    FeatureMatrix out(codes.frames, stack.dim(), fps, kind);
    for (std::size_t l = 0; l < codes.layers; ++l) {
        const Codebook & cb = stack.layers[l];
        for (std::size_t t = 0; t < codes.frames; ++t) {
            const std::uint32_t c = codes.at(l, t);
            if (c >= cb.size()) {
                throw Error(Errc::CodeOutOfRange, "code " + std::to_string(c) + " at layer " + std::to_string(l) +
                                                      " frame " + std::to_string(t) + " >= K=" +
                                                      std::to_string(cb.size()));
            }
            auto e = cb.entry(c);
            auto row = out.row(t);
            for (std::size_t i = 0; i < row.size(); ++i) {
                row[i] += static_cast<double>(e[i]);
            }
        }
    }
    return out;
}

std::vector<std::vector<double>> rvq_residual_energies(const RvqStack & stack, const FeatureMatrix & features) {
    check_stack(stack);
    if (features.dims() != stack.dim()) {
        throw Error(Errc::ShapeMismatch, "feature dim does not match codebook dim");
    }
    std::vector<std::vector<double>> energies(features.frames(), std::vector<double>(stack.num_layers() + 1));
    std::vector<double> r(features.dims());
    for (std::size_t t = 0; t < features.frames(); ++t) {
        auto x = features.row(t);
        std::copy(x.begin(), x.end(), r.begin());
        double e = 0.0;
        for (double v : r) {
            e += v * v;
        }
        energies[t][0] = e;
        for (std::size_t l = 0; l < stack.num_layers(); ++l) {
            const Codebook & cb = stack.layers[l];
            auto entry = cb.entry(cb.nearest(r));
            e = 0.0;
            for (std::size_t i = 0; i < r.size(); ++i) {
                r[i] -= static_cast<double>(entry[i]);
                e += r[i] * r[i];
            }
            energies[t][l + 1] = e;
        }
    }
    return energies;
}

} // namespace hcodec
