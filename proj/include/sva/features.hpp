#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "sva/audio.hpp"
#include "sva/matrix.hpp"

namespace sva {

class Fft;

enum class WindowFunction { box, hamming };

WindowFunction parse_window_function(const std::string& text);

/// Fourier decomposition of one analysis window under the unnormalized
/// forward convention (DC magnitude of a constant window c is w*|c|).
struct SpectrumFrame {
    std::vector<double> magnitudes;          // floor(w/2) usable coefficients
    std::vector<std::complex<double>> coeffs;  // full length w; empty unless retained
};

/// Transform one window. `plan` must match the window length.
SpectrumFrame analyze_window(std::span<const double> samples, const Fft& plan, bool keep_complex = false);

/// Per-window magnitude features: one row per window, the first m Fourier
/// coefficient magnitudes (DC included).
struct FeatureMatrix {
    RowMatrix X;  // n x m
    std::vector<double> window_times_s;

    std::size_t num_windows() const { return X.rows; }
    std::size_t num_coefficients() const { return X.cols; }

    /// Indices of rows without any strictly positive entry. Such rows have
    /// no direction and must be dealt with before cosine distances.
    std::vector<std::size_t> zero_rows() const;
};

FeatureMatrix stft(const WindowedSignal& windows, std::size_t m,
                   WindowFunction window_function = WindowFunction::box, unsigned threads = 1);

/// Half-open coefficient index range [begin, end).
struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;
};

struct BandReconstructStats {
    double max_imag_residue = 0.0;  // largest |imag| discarded after the inverse transform
};

/// Zero every Fourier coefficient outside the union of `keep` (and the
/// conjugate-symmetric partners of the kept ones), inverse-transform each
/// window and re-concatenate. Ranges address the usable indices
/// [0, floor(w/2)); a range whose end reaches floor(w/2) also keeps the
/// Nyquist bin, so ranges that partition [0, floor(w/2)) reconstruct the
/// full signal when summed.
AudioSignal band_reconstruct(const WindowedSignal& windows, std::span<const IndexRange> keep,
                             unsigned threads = 1, BandReconstructStats* stats = nullptr);

/// Centered moving average with truncated windows at the edges; length
/// preserving. `window` must be odd.
std::vector<double> moving_mean(std::span<const double> values, std::size_t window);

/// Scale a nonnegative vector so it sums to 1.
std::vector<double> normalize_sum(std::span<const double> values);

// Feature persistence. The CSV form has header time_s,c0..c{m-1}; the binary
// form is magic "SVFM", a version byte, u32 n, u32 m, n*m little-endian f64
// row-major, then n f64 window start times.
void save_feature_csv(const FeatureMatrix& features, const std::filesystem::path& path);
void save_feature_binary(const FeatureMatrix& features, const std::filesystem::path& path);
FeatureMatrix load_feature_binary(const std::filesystem::path& path);
FeatureMatrix load_feature_csv(const std::filesystem::path& path);

/// Loads .svfm binaries and .csv tables by extension.
FeatureMatrix load_features(const std::filesystem::path& path);

}  // namespace sva
