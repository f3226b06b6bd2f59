#include "hcodec/fft.hpp"

#include "hcodec/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>

namespace hcodec {

namespace {

struct PlanPair {
    fftw_plan forward = nullptr;
    fftw_plan inverse = nullptr;
};

// FFTW's planner is not thread-safe; plans live for the whole process.
std::mutex & planner_mutex() {
    static std::mutex m;
    return m;
}

PlanPair plans_for(std::size_t n) {
    static std::map<std::size_t, PlanPair> cache;
    std::lock_guard<std::mutex> lock(planner_mutex());
    auto it = cache.find(n);
    if (it != cache.end()) {
        return it->second;
    }
    double * real = fftw_alloc_real(n);
    fftw_complex * cplx = fftw_alloc_complex(n / 2 + 1);
    PlanPair p;
    p.forward = fftw_plan_dft_r2c_1d(static_cast<int>(n), real, cplx, FFTW_ESTIMATE);
    p.inverse = fftw_plan_dft_c2r_1d(static_cast<int>(n), cplx, real, FFTW_ESTIMATE);
    fftw_free(real);
    fftw_free(cplx);
    if (p.forward == nullptr || p.inverse == nullptr) {
        throw Error(Errc::InvalidConfig, "FFTW failed to plan length " + std::to_string(n));
    }
    cache.emplace(n, p);
    return p;
}

struct FftwFree {
    void operator()(void * p) const { fftw_free(p); }
};

} // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
    if (n == 0) {
        throw Error(Errc::InvalidConfig, "FFT length must be positive");
    }
    const PlanPair p = plans_for(n);
    forward_plan_ = p.forward;
    inverse_plan_ = p.inverse;
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) const {
    if (in.size() != n_ || out.size() != bins()) {
        throw Error(Errc::ShapeMismatch, "RealFft::forward buffer sizes");
    }
    std::unique_ptr<double, FftwFree> buf(fftw_alloc_real(n_));
    std::unique_ptr<fftw_complex, FftwFree> spec(fftw_alloc_complex(bins()));
    std::copy(in.begin(), in.end(), buf.get());
    fftw_execute_dft_r2c(static_cast<fftw_plan>(forward_plan_), buf.get(), spec.get());
    for (std::size_t k = 0; k < bins(); ++k) {
        out[k] = {spec.get()[k][0], spec.get()[k][1]};
    }
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) const {
    if (in.size() != bins() || out.size() != n_) {
        throw Error(Errc::ShapeMismatch, "RealFft::inverse buffer sizes");
    }
    std::unique_ptr<double, FftwFree> buf(fftw_alloc_real(n_));
    std::unique_ptr<fftw_complex, FftwFree> spec(fftw_alloc_complex(bins()));
    for (std::size_t k = 0; k < bins(); ++k) {
        spec.get()[k][0] = in[k].real();
        spec.get()[k][1] = in[k].imag();
    }
    fftw_execute_dft_c2r(static_cast<fftw_plan>(inverse_plan_), spec.get(), buf.get());
    const double scale = 1.0 / static_cast<double>(n_);
    for (std::size_t i = 0; i < n_; ++i) {
        out[i] = buf.get()[i] * scale;
    }
}

std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) {
        return {};
    }
    const std::size_t out_len = a.size() + b.size() - 1;
    std::size_t n = 1;
    while (n < out_len) {
        n <<= 1;
    }
    RealFft fft(n);
    std::vector<double> pa(n, 0.0), pb(n, 0.0);
    std::copy(a.begin(), a.end(), pa.begin());
    std::copy(b.begin(), b.end(), pb.begin());
    std::vector<std::complex<double>> sa(fft.bins()), sb(fft.bins());
    fft.forward(pa, sa);
    fft.forward(pb, sb);
    for (std::size_t k = 0; k < sa.size(); ++k) {
        sa[k] *= sb[k];
    }
    fft.inverse(sa, pa);
    pa.resize(out_len);
    return pa;
}

} // namespace hcodec
