#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace hcodec {

// Real-input FFT of arbitrary length backed by FFTW. Plans are created once
// per length and shared; execution is safe from multiple threads.
class RealFft {
public:
    explicit RealFft(std::size_t n);

    std::size_t size() const { return n_; }
    std::size_t bins() const { return n_ / 2 + 1; }

    // in.size() == n, out.size() == n/2+1
    void forward(std::span<const double> in, std::span<std::complex<double>> out) const;
    // in.size() == n/2+1, out.size() == n; normalized so inverse(forward(x)) == x
    void inverse(std::span<const std::complex<double>> in, std::span<double> out) const;

private:
    std::size_t n_;
    void * forward_plan_;
    void * inverse_plan_;
};

// Full linear convolution via FFT; result length a.size() + b.size() - 1.
std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> b);

} // namespace hcodec
