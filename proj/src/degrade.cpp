#include "hcodec/degrade.hpp"

#include "hcodec/error.hpp"
#include "hcodec/fft.hpp"
#include "hcodec/rng.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

namespace hcodec {

using nlohmann::json;

namespace {

double energy(std::span<const double> x) {
    double e = 0.0;
    for (double v : x) {
        e += v * v;
    }
    return e;
}

void check_range(const Range & r, double lo, double hi, std::string_view what) {
    if (!(r.lo <= r.hi) || r.lo < lo || r.hi > hi) {
        throw Error(Errc::InvalidConfig, std::string(what) + " range [" + std::to_string(r.lo) + ", " +
                                             std::to_string(r.hi) + "] is empty or out of bounds");
    }
}

json range_json(const Range & r) {
    return json::array({r.lo, r.hi});
}

Range range_from(const json & j) {
    const auto v = j.get<std::vector<double>>();
    if (v.size() != 2) {
        throw Error(Errc::InvalidConfig, "range must have two values");
    }
    return {v[0], v[1]};
}

DistortionKind distortion_from_name(std::string_view name) {
    for (DistortionKind k : kDistortionOrder) {
        if (distortion_name(k) == name) {
            return k;
        }
    }
    throw Error(Errc::InvalidConfig, "unknown distortion " + std::string(name));
}

std::int64_t pick_asset(Rng & rng, const std::vector<Waveform> & pool, bool fallback, DistortionKind kind) {
    if (!pool.empty()) {
        return static_cast<std::int64_t>(rng.below(pool.size()));
    }
    if (!fallback) {
        throw Error(Errc::AssetMissing, "no " + std::string(distortion_name(kind)) +
                                            " assets and synthetic fallback is disabled");
    }
    return -1;
}

const Waveform & pooled(const std::vector<Waveform> & pool, std::int64_t index, DistortionKind kind) {
    if (index < 0 || static_cast<std::size_t>(index) >= pool.size()) {
        throw Error(Errc::AssetMissing, std::string(distortion_name(kind)) + " asset " + std::to_string(index) +
                                            " is not in the pool");
    }
    return pool[static_cast<std::size_t>(index)];
}

Waveform white_noise(std::size_t n, std::uint32_t sr, std::uint64_t seed) {
    Rng rng(seed);
    Waveform out;
    out.sample_rate = sr;
    out.samples.resize(n);
    for (double & v : out.samples) {
        v = rng.normal();
    }
    return out;
}

// Noise with a 4 Hz syllable-rate envelope, a crude competing talker.
Waveform babble(std::size_t n, std::uint32_t sr, std::uint64_t seed) {
    Waveform out = white_noise(n, sr, seed);
    const double phase = Rng(seed ^ 0x5bd1e995ULL).uniform(0.0, 2.0 * std::numbers::pi);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / sr;
        out.samples[i] *= 1.0 + 0.9 * std::sin(2.0 * std::numbers::pi * 4.0 * t + phase);
    }
    return out;
}

std::size_t offset_for(double u, std::size_t source_len, std::size_t target_len) {
    if (source_len <= target_len) {
        return 0;
    }
    const std::size_t span = source_len - target_len + 1;
    return std::min(span - 1, static_cast<std::size_t>(u * static_cast<double>(span)));
}

double param(const AppliedDistortion & op, const std::string & key) {
    const auto it = op.params.find(key);
    if (it == op.params.end()) {
        throw Error(Errc::InvalidConfig, std::string(distortion_name(op.kind)) + " entry lacks '" + key + "'");
    }
    return it->second;
}

} // namespace

std::string_view distortion_name(DistortionKind kind) {
    switch (kind) {
        case DistortionKind::AdditiveNoise: return "additive_noise";
        case DistortionKind::Reverb:        return "reverb";
        case DistortionKind::Clipping:      return "clipping";
        case DistortionKind::Bandwidth:     return "bandwidth";
        case DistortionKind::PacketLoss:    return "packet_loss";
        case DistortionKind::Interferer:    return "interferer";
    }
    return "?";
}

void ChainConfig::validate() const {
    for (DistortionKind k : kDistortionOrder) {
        const double v = p(k);
        if (!(v >= 0.0 && v <= 1.0)) {
            throw Error(Errc::InvalidConfig, std::string(distortion_name(k)) + " probability outside [0, 1]");
        }
    }
    check_range(snr_db, -1e9, 1e9, "snr_db");
    check_range(t60_s, 1e-4, 1e3, "t60_s");
    check_range(min_quantile, 0.0, 1.0, "min_quantile");
    check_range(max_quantile, 0.0, 1.0, "max_quantile");
    if (!(min_quantile.hi < max_quantile.lo)) {
        throw Error(Errc::InvalidConfig, "min_quantile must lie strictly below max_quantile");
    }
    if (cutoff_hz.empty() || std::any_of(cutoff_hz.begin(), cutoff_hz.end(), [](double c) { return !(c > 0.0); })) {
        throw Error(Errc::InvalidConfig, "cutoff list must be nonempty and positive");
    }
    check_range(loss_rate, 0.0, 1.0, "loss_rate");
    if (loss_rate.hi >= 1.0) {
        throw Error(Errc::InvalidConfig, "loss rate must stay below 1");
    }
    if (!(packet_ms > 0.0)) {
        throw Error(Errc::InvalidConfig, "packet_ms must be positive");
    }
    check_range(sir_db, -1e9, 1e9, "sir_db");
}

ChainConfig with_mode(ChainConfig cfg, TaskMode mode) {
    switch (mode) {
        case TaskMode::TSE:
        case TaskMode::rTSE:
            cfg.p(DistortionKind::Interferer) = 1.0;
            cfg.sir_db = {-5.0, 5.0};
            break;
        case TaskMode::LASS:
            cfg.probability.fill(0.0);
            cfg.p(DistortionKind::Interferer) = 1.0;
            cfg.sir_db = {-5.0, 20.0};
            break;
        default:
            break;
    }
    return cfg;
}

std::string chain_config_to_json(const ChainConfig & cfg) {
    json list = json::array();
    for (DistortionKind k : kDistortionOrder) {
        json d{{"kind", distortion_name(k)}, {"probability", cfg.p(k)}};
        switch (k) {
            case DistortionKind::AdditiveNoise: d["snr_db"] = range_json(cfg.snr_db); break;
            case DistortionKind::Reverb:        d["t60_s"] = range_json(cfg.t60_s); break;
            case DistortionKind::Clipping:
                d["min_quantile"] = range_json(cfg.min_quantile);
                d["max_quantile"] = range_json(cfg.max_quantile);
                break;
            case DistortionKind::Bandwidth:  d["cutoff_hz"] = cfg.cutoff_hz; break;
            case DistortionKind::PacketLoss:
                d["loss_rate"] = range_json(cfg.loss_rate);
                d["packet_ms"] = cfg.packet_ms;
                break;
            case DistortionKind::Interferer: d["sir_db"] = range_json(cfg.sir_db); break;
        }
        list.push_back(std::move(d));
    }
    const json j{{"seed", cfg.seed}, {"synthetic_fallback", cfg.synthetic_fallback}, {"distortions", std::move(list)}};
    return j.dump(2);
}

ChainConfig chain_config_from_json(std::string_view text) {
    ChainConfig cfg;
    try {
        const json j = json::parse(text);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.synthetic_fallback = j.value("synthetic_fallback", cfg.synthetic_fallback);
        if (j.contains("distortions")) {
            for (const json & d : j.at("distortions")) {
                const DistortionKind k = distortion_from_name(d.at("kind").get<std::string>());
                cfg.p(k) = d.value("probability", cfg.p(k));
                if (d.contains("snr_db")) cfg.snr_db = range_from(d.at("snr_db"));
                if (d.contains("t60_s")) cfg.t60_s = range_from(d.at("t60_s"));
                if (d.contains("min_quantile")) cfg.min_quantile = range_from(d.at("min_quantile"));
                if (d.contains("max_quantile")) cfg.max_quantile = range_from(d.at("max_quantile"));
                if (d.contains("cutoff_hz")) cfg.cutoff_hz = d.at("cutoff_hz").get<std::vector<double>>();
                if (d.contains("loss_rate")) cfg.loss_rate = range_from(d.at("loss_rate"));
                if (d.contains("packet_ms")) cfg.packet_ms = d.at("packet_ms").get<double>();
                if (d.contains("sir_db")) cfg.sir_db = range_from(d.at("sir_db"));
            }
        }
    } catch (const json::exception & e) {
        throw Error(Errc::InvalidConfig, std::string("chain config json: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

Waveform add_noise(const Waveform & w, const Waveform & noise, double snr_db, std::size_t offset) {
    if (w.samples.empty() || noise.samples.empty()) {
        throw Error(Errc::EmptyInput, "cannot mix empty signals");
    }
    if (w.sample_rate != noise.sample_rate) {
        throw Error(Errc::ShapeMismatch, "mixture components differ in sample rate");
    }
    const double ew = energy(w.samples);
    if (ew == 0.0) {
        throw Error(Errc::SilentInput, "clean signal is silent");
    }
    Waveform out = w;
    if (snr_db >= kNoOpRatioDb) {
        return out;
    }
    std::vector<double> segment(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        segment[i] = noise.samples[(offset + i) % noise.size()];
    }
    const double en = energy(segment);
    if (en == 0.0) {
        throw Error(Errc::SilentInput, "noise segment is silent");
    }
    const double g = std::sqrt(ew / en) * std::pow(10.0, -snr_db / 20.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
        out.samples[i] += g * segment[i];
    }
    return out;
}

Waveform mix_interferer(const Waveform & w, const Waveform & interferer, double sir_db, std::size_t offset) {
    return add_noise(w, interferer, sir_db, offset);
}

double quantile(std::span<const double> values, double q) {
    if (values.empty()) {
        throw Error(Errc::EmptyInput, "quantile of an empty set");
    }
    std::vector<double> s(values.begin(), values.end());
    std::sort(s.begin(), s.end());
    const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, s.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return s[lo] + frac * (s[hi] - s[lo]);
}

Waveform clip_quantile(const Waveform & w, double q_lo, double q_hi) {
    if (!(q_lo >= 0.0 && q_lo < q_hi && q_hi <= 1.0)) {
        throw Error(Errc::InvalidConfig, "clipping needs 0 <= q_lo < q_hi <= 1");
    }
    if (w.samples.empty()) {
        throw Error(Errc::EmptyInput, "cannot clip an empty signal");
    }
    const double lo = quantile(w.samples, q_lo);
    const double hi = quantile(w.samples, q_hi);
    Waveform out = w;
    if (lo == hi) {
        spdlog::warn("clipping quantiles coincide at {}, leaving signal unchanged", lo);
        return out;
    }
    for (double & v : out.samples) {
        v = std::clamp(v, lo, hi);
    }
    return out;
}

std::vector<double> lowpass_taps(double cutoff_hz, std::uint32_t sample_rate, std::size_t taps) {
    const double nyquist = sample_rate / 2.0;
    if (!(cutoff_hz > 0.0) || cutoff_hz >= nyquist) {
        throw Error(Errc::InvalidConfig, "cutoff " + std::to_string(cutoff_hz) + " Hz must lie in (0, " +
                                             std::to_string(nyquist) + ") Hz");
    }
    if (taps < 3 || taps % 2 == 0) {
        throw Error(Errc::InvalidConfig, "low-pass needs an odd tap count >= 3");
    }
    const double fc = cutoff_hz / sample_rate;
    const double centre = static_cast<double>(taps - 1) / 2.0;
    std::vector<double> h(taps);
    double sum = 0.0;
    for (std::size_t n = 0; n < taps; ++n) {
        const double x = static_cast<double>(n) - centre;
        const double sinc = x == 0.0 ? 2.0 * fc : std::sin(2.0 * std::numbers::pi * fc * x) / (std::numbers::pi * x);
        const double win = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / (taps - 1));
        h[n] = sinc * win;
        sum += h[n];
    }
    for (double & v : h) {
        v /= sum;
    }
    return h;
}

Waveform bandlimit(const Waveform & w, double cutoff_hz) {
    const auto h = lowpass_taps(cutoff_hz, w.sample_rate);
    Waveform out;
    out.sample_rate = w.sample_rate;
    if (w.samples.empty()) {
        return out;
    }
    const auto full = fft_convolve(w.samples, h);
    const std::size_t delay = (h.size() - 1) / 2;
    out.samples.assign(full.begin() + static_cast<std::ptrdiff_t>(delay),
                       full.begin() + static_cast<std::ptrdiff_t>(delay + w.size()));
    return out;
}

Waveform packet_loss(const Waveform & w, double rate, double packet_ms, std::uint64_t seed, PacketLossStats * stats) {
    if (!(packet_ms > 0.0)) {
        throw Error(Errc::InvalidConfig, "packet length must be positive");
    }
    if (!(rate >= 0.0 && rate < 1.0)) {
        throw Error(Errc::InvalidConfig, "loss rate must lie in [0, 1)");
    }
    const auto plen = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(w.sample_rate * packet_ms / 1000.0)));
    Waveform out = w;
    PacketLossStats st;
    st.packets = (w.size() + plen - 1) / plen;
    Rng rng(seed);
    // floor(rate * n) packets plus one more with the fractional probability,
    // at uniformly random positions; each packet is still lost with
    // probability `rate`, and the realised fraction is within 1/n of it.
    const double want = rate * static_cast<double>(st.packets);
    st.dropped = static_cast<std::size_t>(std::floor(want));
    if (rng.bernoulli(want - static_cast<double>(st.dropped))) {
        ++st.dropped;
    }
    std::vector<std::size_t> order(st.packets);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i < st.dropped; ++i) {
        std::swap(order[i], order[i + rng.below(st.packets - i)]);
        const std::size_t p = order[i];
        const std::size_t end = std::min(w.size(), (p + 1) * plen);
        std::fill(out.samples.begin() + static_cast<std::ptrdiff_t>(p * plen),
                  out.samples.begin() + static_cast<std::ptrdiff_t>(end), 0.0);
    }
    if (stats) {
        *stats = st;
    }
    return out;
}

Waveform reverb(const Waveform & w, std::span<const double> rir) {
    if (rir.empty()) {
        throw Error(Errc::InvalidConfig, "empty room impulse response");
    }
    Waveform out;
    out.sample_rate = w.sample_rate;
    if (w.samples.empty()) {
        return out;
    }
    auto full = fft_convolve(w.samples, rir);
    full.resize(w.size());
    out.samples = std::move(full);
    return out;
}

std::vector<double> synthetic_rir(double t60_s, std::uint32_t sample_rate, std::uint64_t seed) {
    if (!(t60_s > 0.0)) {
        throw Error(Errc::InvalidConfig, "T60 must be positive");
    }
    const double span = t60_s * sample_rate;
    const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span)));
    Rng rng(seed);
    std::vector<double> h(n);
    // amplitude falls by 10^-3 (60 dB) over t60
    const double rate = 3.0 * std::numbers::ln10 / span;
    for (std::size_t i = 0; i < n; ++i) {
        h[i] = rng.normal() * std::exp(-rate * static_cast<double>(i));
    }
    const double e = std::sqrt(energy(h));
    for (double & v : h) {
        v /= e;
    }
    return h;
}

ChainPlan plan_chain(const ChainConfig & cfg, const Assets & assets) {
    cfg.validate();
    ChainPlan plan;
    plan.seed = cfg.seed;
    for (DistortionKind k : kDistortionOrder) {
        Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(k) + 1));
        if (!rng.bernoulli(cfg.p(k))) {
            continue;
        }
        AppliedDistortion op;
        op.kind = k;
        switch (k) {
            case DistortionKind::AdditiveNoise:
                op.params["snr_db"] = rng.uniform(cfg.snr_db.lo, cfg.snr_db.hi);
                op.asset = pick_asset(rng, assets.noise, cfg.synthetic_fallback, k);
                op.params["offset_u"] = rng.uniform01();
                break;
            case DistortionKind::Reverb:
                op.asset = pick_asset(rng, assets.rir, cfg.synthetic_fallback, k);
                if (op.asset < 0) {
                    op.params["t60_s"] = rng.uniform(cfg.t60_s.lo, cfg.t60_s.hi);
                }
                break;
            case DistortionKind::Clipping:
                op.params["q_lo"] = rng.uniform(cfg.min_quantile.lo, cfg.min_quantile.hi);
                op.params["q_hi"] = rng.uniform(cfg.max_quantile.lo, cfg.max_quantile.hi);
                break;
            case DistortionKind::Bandwidth:
                op.params["cutoff_hz"] = cfg.cutoff_hz[rng.below(cfg.cutoff_hz.size())];
                break;
            case DistortionKind::PacketLoss:
                op.params["rate"] = rng.uniform(cfg.loss_rate.lo, cfg.loss_rate.hi);
                op.params["packet_ms"] = cfg.packet_ms;
                break;
            case DistortionKind::Interferer:
                op.params["sir_db"] = rng.uniform(cfg.sir_db.lo, cfg.sir_db.hi);
                op.asset = pick_asset(rng, assets.interferer, cfg.synthetic_fallback, k);
                op.params["offset_u"] = rng.uniform01();
                break;
        }
        op.seed = rng.next();
        plan.ops.push_back(std::move(op));
    }
    return plan;
}

Waveform apply_plan(const Waveform & w, const ChainPlan & plan, const Assets & assets) {
    Waveform x = w;
    for (const AppliedDistortion & op : plan.ops) {
        switch (op.kind) {
            case DistortionKind::AdditiveNoise:
            case DistortionKind::Interferer: {
                const bool noise = op.kind == DistortionKind::AdditiveNoise;
                const double ratio = param(op, noise ? "snr_db" : "sir_db");
                if (ratio >= kNoOpRatioDb) {
                    break;
                }
                const Waveform src = op.asset >= 0
                                         ? pooled(noise ? assets.noise : assets.interferer, op.asset, op.kind)
                                         : (noise ? white_noise(x.size(), x.sample_rate, op.seed)
                                                  : babble(x.size(), x.sample_rate, op.seed));
                x = add_noise(x, src, ratio, offset_for(param(op, "offset_u"), src.size(), x.size()));
                break;
            }
            case DistortionKind::Reverb:
                if (op.asset >= 0) {
                    x = reverb(x, pooled(assets.rir, op.asset, op.kind).samples);
                } else {
                    x = reverb(x, synthetic_rir(param(op, "t60_s"), x.sample_rate, op.seed));
                }
                break;
            case DistortionKind::Clipping:
                x = clip_quantile(x, param(op, "q_lo"), param(op, "q_hi"));
                break;
            case DistortionKind::Bandwidth:
                x = bandlimit(x, param(op, "cutoff_hz"));
                break;
            case DistortionKind::PacketLoss:
                x = packet_loss(x, param(op, "rate"), param(op, "packet_ms"), op.seed);
                break;
        }
    }
    return x;
}

ChainResult run_chain(const Waveform & w, const ChainConfig & cfg, const Assets & assets) {
    ChainResult r;
    r.log = plan_chain(cfg, assets);
    r.degraded = apply_plan(w, r.log, assets);
    return r;
}

std::string plan_to_json(const ChainPlan & plan) {
    json ops = json::array();
    for (const AppliedDistortion & op : plan.ops) {
        ops.push_back({{"kind", distortion_name(op.kind)}, {"params", op.params}, {"seed", op.seed}, {"asset", op.asset}});
    }
    return json{{"seed", plan.seed}, {"ops", std::move(ops)}}.dump();
}

ChainPlan plan_from_json(std::string_view text) {
    try {
        const json j = json::parse(text);
        ChainPlan plan;
        plan.seed = j.at("seed").get<std::uint64_t>();
        for (const json & o : j.at("ops")) {
            AppliedDistortion op;
            op.kind = distortion_from_name(o.at("kind").get<std::string>());
            op.params = o.at("params").get<std::map<std::string, double>>();
            op.seed = o.at("seed").get<std::uint64_t>();
            op.asset = o.at("asset").get<std::int64_t>();
            plan.ops.push_back(std::move(op));
        }
        return plan;
    } catch (const json::exception & e) {
        throw Error(Errc::InvalidConfig, std::string("chain log json: ") + e.what());
    }
}

} // namespace hcodec
