#include "sva/fft.hpp"

#include <cmath>
#include <numbers>

#include "sva/error.hpp"

namespace sva {

namespace {

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

/// exp(-i*pi*t^2/n) with the quadratic phase reduced mod 2n in exact integer
/// arithmetic; t^2 overflows the double mantissa long before it overflows
/// uint64 for any plausible n.
cplx chirp_factor(std::size_t t, std::size_t n) {
    const std::uint64_t q = (static_cast<std::uint64_t>(t) * t) % (2 * static_cast<std::uint64_t>(n));
    const double angle = -std::numbers::pi * static_cast<double>(q) / static_cast<double>(n);
    return {std::cos(angle), std::sin(angle)};
}

}  // namespace

Fft::Fft(std::size_t n) : n_(n), pow2_(is_pow2(n)) {
    if (n == 0) throw Error("fft: transform length must be positive");

    pow2_len_ = pow2_ ? n_ : next_pow2(2 * n_ - 1);

    // Bit-reversal permutation for the radix-2 length.
    bit_reversal_.assign(pow2_len_, 0);
    for (std::size_t i = 1, j = 0; i < pow2_len_; ++i) {
        std::size_t bit = pow2_len_ >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        bit_reversal_[i] = j;
    }

    // Forward twiddles, one table per stage: exp(-2*pi*i*j/len) for
    // j < len/2, len = 2,4,...,pow2_len_. Inverse uses the conjugates.
    twiddles_.reserve(pow2_len_ > 1 ? pow2_len_ - 1 : 0);
    for (std::size_t len = 2; len <= pow2_len_; len <<= 1) {
        for (std::size_t j = 0; j < len / 2; ++j) {
            const double angle = -2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(len);
            twiddles_.emplace_back(std::cos(angle), std::sin(angle));
        }
    }

    if (!pow2_) {
        chirp_.resize(n_);
        for (std::size_t t = 0; t < n_; ++t) chirp_[t] = chirp_factor(t, n_);

        // Wrapped conjugate chirp b[t] = exp(+i*pi*t^2/n), placed at both t
        // and pow2_len_-t so the circular convolution sees b[k-t] for
        // negative k-t as well.
        chirp_spectrum_.assign(pow2_len_, cplx{0.0, 0.0});
        for (std::size_t t = 0; t < n_; ++t) {
            const cplx b = std::conj(chirp_[t]);
            chirp_spectrum_[t] = b;
            if (t != 0) chirp_spectrum_[pow2_len_ - t] = b;
        }
        pow2_transform(chirp_spectrum_.data(), -1);
    }
}

void Fft::pow2_transform(cplx* data, int sign) const {
    const std::size_t n = pow2_len_;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = bit_reversal_[i];
        if (i < j) std::swap(data[i], data[j]);
    }
    const cplx* stage = twiddles_.data();
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        for (std::size_t block = 0; block < n; block += len) {
            for (std::size_t j = 0; j < half; ++j) {
                const cplx w = sign < 0 ? stage[j] : std::conj(stage[j]);
                const cplx odd = data[block + j + half] * w;
                const cplx even = data[block + j];
                data[block + j] = even + odd;
                data[block + j + half] = even - odd;
            }
        }
        stage += half;
    }
}

void Fft::transform(cplx* data, int sign) const {
    if (pow2_) {
        pow2_transform(data, sign);
        return;
    }
    if (sign > 0) {
        // Positive-sign transform via conjugation of the forward one.
        for (std::size_t i = 0; i < n_; ++i) data[i] = std::conj(data[i]);
        transform(data, -1);
        for (std::size_t i = 0; i < n_; ++i) data[i] = std::conj(data[i]);
        return;
    }

    // Bluestein: X[k] = a[k] * sum_t (x[t]*a[t]) * b[k-t] with a = chirp and
    // b = conj(chirp); the circular convolution runs on the padded radix-2
    // grid against the precomputed chirp spectrum.
    std::vector<cplx> work(pow2_len_, cplx{0.0, 0.0});
    for (std::size_t t = 0; t < n_; ++t) work[t] = data[t] * chirp_[t];
    pow2_transform(work.data(), -1);
    for (std::size_t i = 0; i < pow2_len_; ++i) work[i] *= chirp_spectrum_[i];
    // Inverse convolution FFT via conjugation: ifft(v) = conj(fft(conj(v)))/M.
    for (std::size_t i = 0; i < pow2_len_; ++i) work[i] = std::conj(work[i]);
    pow2_transform(work.data(), -1);
    const double inv = 1.0 / static_cast<double>(pow2_len_);
    for (std::size_t k = 0; k < n_; ++k) data[k] = std::conj(work[k]) * inv * chirp_[k];
}

void Fft::forward(const cplx* in, cplx* out) const {
    if (out != in) {
        for (std::size_t i = 0; i < n_; ++i) out[i] = in[i];
    }
    transform(out, -1);
}

void Fft::inverse(const cplx* in, cplx* out) const {
    if (out != in) {
        for (std::size_t i = 0; i < n_; ++i) out[i] = in[i];
    }
    transform(out, +1);
    const double inv = 1.0 / static_cast<double>(n_);
    for (std::size_t i = 0; i < n_; ++i) out[i] *= inv;
}

}  // namespace sva
