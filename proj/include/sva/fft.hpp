#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

namespace sva {

using cplx = std::complex<double>;

/// Discrete Fourier transform plan for one fixed length.
///
/// Convention: forward is the unnormalized sum
///     X[k] = sum_t x[t] * exp(-2*pi*i*k*t/n)
/// and inverse carries the 1/n factor, so inverse(forward(x)) == x.
///
/// Power-of-two lengths run an iterative radix-2 transform; everything else
/// goes through Bluestein's chirp transform on a padded power-of-two
/// convolution. Plans are immutable after construction and safe to share
/// across threads.
class Fft {
public:
    explicit Fft(std::size_t n);

    std::size_t size() const { return n_; }

    void forward(const cplx* in, cplx* out) const;
    void inverse(const cplx* in, cplx* out) const;

private:
    void transform(cplx* data, int sign) const;     // dispatches on length kind
    void pow2_transform(cplx* data, int sign) const;  // in-place, length conv_n_ or n_

    std::size_t n_;
    bool pow2_;

    // Radix-2 machinery for length `pow2_len_` (== n_ when pow2_, otherwise
    // the Bluestein convolution length).
    std::size_t pow2_len_ = 0;
    std::vector<std::size_t> bit_reversal_;
    std::vector<cplx> twiddles_;  // per-stage tables, concatenated

    // Bluestein state.
    std::vector<cplx> chirp_;          // exp(-i*pi*t^2/n), length n_
    std::vector<cplx> chirp_spectrum_;  // forward pow2 FFT of the wrapped conjugate chirp
};

}  // namespace sva
