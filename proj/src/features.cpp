#include "sva/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <sstream>

#include "sva/error.hpp"
#include "sva/fft.hpp"
#include "sva/kernels.hpp"
#include "sva/threading.hpp"

namespace sva {

namespace {

constexpr char kFeatureMagic[4] = {'S', 'V', 'F', 'M'};
constexpr std::uint8_t kFeatureVersion = 1;

std::vector<double> window_taper(WindowFunction fn, std::size_t w) {
    std::vector<double> taper;
    if (fn == WindowFunction::hamming) {
        taper.resize(w);
        for (std::size_t i = 0; i < w; ++i) {
            taper[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                              static_cast<double>(w - 1));
        }
    }
    return taper;  // empty for box
}

void format_double(std::string& out, double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    out += buf;
}

}  // namespace

WindowFunction parse_window_function(const std::string& text) {
    if (text == "box") return WindowFunction::box;
    if (text == "hamming") return WindowFunction::hamming;
    throw Error("unknown window function '" + text + "' (expected box or hamming)");
}

SpectrumFrame analyze_window(std::span<const double> samples, const Fft& plan, bool keep_complex) {
    if (plan.size() != samples.size()) throw Error("analyze_window: plan length does not match window length");
    const std::size_t w = samples.size();

    std::vector<cplx> spectrum(w);
    for (std::size_t i = 0; i < w; ++i) spectrum[i] = cplx{samples[i], 0.0};
    plan.forward(spectrum.data(), spectrum.data());

    SpectrumFrame frame;
    const std::size_t usable = w / 2;
    std::vector<double> re(usable), im(usable);
    for (std::size_t k = 0; k < usable; ++k) {
        re[k] = spectrum[k].real();
        im[k] = spectrum[k].imag();
    }
    frame.magnitudes.resize(usable);
    kernels::magnitudes(re.data(), im.data(), frame.magnitudes.data(), usable);
    if (keep_complex) frame.coeffs = std::move(spectrum);
    return frame;
}

std::vector<std::size_t> FeatureMatrix::zero_rows() const {
    std::vector<std::size_t> flagged;
    for (std::size_t i = 0; i < X.rows; ++i) {
        const auto row = X.row(i);
        const bool positive = std::any_of(row.begin(), row.end(), [](double v) { return v > 0.0; });
        if (!positive) flagged.push_back(i);
    }
    return flagged;
}

FeatureMatrix stft(const WindowedSignal& windows, std::size_t m, WindowFunction window_function, unsigned threads) {
    const std::size_t w = windows.window_len_frames;
    if (m == 0 || m > w / 2) {
        throw Error("coefficient count m=" + std::to_string(m) + " out of range (1.." + std::to_string(w / 2) +
                    " for " + std::to_string(w) + "-frame windows)");
    }

    FeatureMatrix features;
    features.X = RowMatrix(windows.count, m);
    features.window_times_s = windows.window_times_s;

    const std::vector<double> taper = window_taper(window_function, w);
    const Fft plan(w);
    parallel_chunks(0, windows.count, threads, [&](std::size_t lo, std::size_t hi) {
        std::vector<double> tapered;
        for (std::size_t i = lo; i < hi; ++i) {
            std::span<const double> row = windows.row(i);
            if (!taper.empty()) {
                tapered.assign(row.begin(), row.end());
                for (std::size_t j = 0; j < w; ++j) tapered[j] *= taper[j];
                row = tapered;
            }
            const SpectrumFrame frame = analyze_window(row, plan);
            std::copy_n(frame.magnitudes.begin(), m, features.X.row(i).begin());
        }
    });
    return features;
}

AudioSignal band_reconstruct(const WindowedSignal& windows, std::span<const IndexRange> keep, unsigned threads,
                             BandReconstructStats* stats) {
    const std::size_t w = windows.window_len_frames;
    const std::size_t usable = w / 2;
    for (const auto& range : keep) {
        if (range.begin > range.end || range.end > usable) {
            throw Error("coefficient range [" + std::to_string(range.begin) + ", " + std::to_string(range.end) +
                        ") out of bounds (usable coefficients: 0.." + std::to_string(usable) + ")");
        }
    }

    // Mask over the full spectrum: kept usable indices plus their
    // conjugate-symmetric partners; a range reaching floor(w/2) also keeps
    // the Nyquist bin so complementary bands sum back to the original.
    std::vector<char> keep_mask(w, 0);
    for (const auto& range : keep) {
        for (std::size_t k = range.begin; k < range.end; ++k) {
            keep_mask[k] = 1;
            if (k != 0) keep_mask[w - k] = 1;
        }
        if (range.end == usable && w % 2 == 0 && range.begin < range.end) keep_mask[usable] = 1;
    }

    AudioSignal out;
    out.sample_rate_hz = windows.source_rate_hz;
    out.samples.assign(windows.count * w, 0.0);

    const Fft plan(w);
    std::vector<double> residues(windows.count, 0.0);
    parallel_chunks(0, windows.count, threads, [&](std::size_t lo, std::size_t hi) {
        std::vector<cplx> spectrum(w);
        for (std::size_t i = lo; i < hi; ++i) {
            const auto row = windows.row(i);
            for (std::size_t j = 0; j < w; ++j) spectrum[j] = cplx{row[j], 0.0};
            plan.forward(spectrum.data(), spectrum.data());
            for (std::size_t k = 0; k < w; ++k) {
                if (!keep_mask[k]) spectrum[k] = cplx{0.0, 0.0};
            }
            plan.inverse(spectrum.data(), spectrum.data());
            double residue = 0.0;
            double* dst = out.samples.data() + i * w;
            for (std::size_t j = 0; j < w; ++j) {
                dst[j] = spectrum[j].real();
                residue = std::max(residue, std::abs(spectrum[j].imag()));
            }
            residues[i] = residue;
        }
    });
    if (stats != nullptr) {
        stats->max_imag_residue = residues.empty() ? 0.0 : *std::max_element(residues.begin(), residues.end());
    }
    return out;
}

std::vector<double> moving_mean(std::span<const double> values, std::size_t window) {
    if (window % 2 == 0 || window == 0) {
        throw Error("moving mean window must be odd, got " + std::to_string(window));
    }
    if (window > values.size()) {
        throw Error("moving mean window " + std::to_string(window) + " exceeds vector length " +
                    std::to_string(values.size()));
    }
    const std::size_t n = values.size();
    const std::size_t half = window / 2;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(n, i + half + 1);
        out[i] = kernels::sum(values.data() + lo, hi - lo) / static_cast<double>(hi - lo);
    }
    return out;
}

std::vector<double> normalize_sum(std::span<const double> values) {
    const double total = kernels::sum(values.data(), values.size());
    if (!(total > 0.0)) throw Error("cannot normalize a vector with nonpositive sum");
    std::vector<double> out(values.begin(), values.end());
    kernels::scale(out.data(), out.size(), 1.0 / total);
    return out;
}

void save_feature_csv(const FeatureMatrix& features, const std::filesystem::path& path) {
    std::string out;
    out.reserve(features.X.rows * features.X.cols * 12 + 64);
    out += "time_s";
    for (std::size_t j = 0; j < features.X.cols; ++j) {
        out += ",c";
        out += std::to_string(j);
    }
    out += '\n';
    for (std::size_t i = 0; i < features.X.rows; ++i) {
        format_double(out, features.window_times_s[i]);
        for (const double v : features.X.row(i)) {
            out += ',';
            format_double(out, v);
        }
        out += '\n';
    }
    std::ofstream file(path, std::ios::trunc);
    if (!file) throw Error("cannot write feature CSV: " + path.string());
    file << out;
    if (!file) throw Error("failed writing feature CSV: " + path.string());
}

void save_feature_binary(const FeatureMatrix& features, const std::filesystem::path& path) {
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw Error("cannot write feature file: " + path.string());
    file.write(kFeatureMagic, 4);
    file.put(static_cast<char>(kFeatureVersion));
    const auto n = static_cast<std::uint32_t>(features.X.rows);
    const auto m = static_cast<std::uint32_t>(features.X.cols);
    file.write(reinterpret_cast<const char*>(&n), 4);
    file.write(reinterpret_cast<const char*>(&m), 4);
    file.write(reinterpret_cast<const char*>(features.X.values.data()),
               static_cast<std::streamsize>(features.X.values.size() * sizeof(double)));
    file.write(reinterpret_cast<const char*>(features.window_times_s.data()),
               static_cast<std::streamsize>(features.window_times_s.size() * sizeof(double)));
    if (!file) throw Error("failed writing feature file: " + path.string());
}

FeatureMatrix load_feature_binary(const std::filesystem::path& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw Error("cannot open feature file: " + path.string());
    char magic[4];
    file.read(magic, 4);
    if (!file || std::memcmp(magic, kFeatureMagic, 4) != 0) {
        throw Error(path.string() + " is not a feature file (bad magic)");
    }
    const int version = file.get();
    if (version != kFeatureVersion) {
        throw Error(path.string() + " has unsupported feature format version " + std::to_string(version));
    }
    std::uint32_t n = 0, m = 0;
    file.read(reinterpret_cast<char*>(&n), 4);
    file.read(reinterpret_cast<char*>(&m), 4);
    if (!file) throw Error("truncated feature file: " + path.string());

    FeatureMatrix features;
    features.X = RowMatrix(n, m);
    features.window_times_s.assign(n, 0.0);
    file.read(reinterpret_cast<char*>(features.X.values.data()),
              static_cast<std::streamsize>(features.X.values.size() * sizeof(double)));
    file.read(reinterpret_cast<char*>(features.window_times_s.data()),
              static_cast<std::streamsize>(n * sizeof(double)));
    if (!file) throw Error("truncated feature file: " + path.string());
    return features;
}

FeatureMatrix load_feature_csv(const std::filesystem::path& path) {
    std::ifstream file(path);
    if (!file) throw Error("cannot open feature CSV: " + path.string());
    std::string line;
    if (!std::getline(file, line)) throw Error("empty feature CSV: " + path.string());

    std::vector<double> values;
    std::vector<double> times;
    std::size_t m = 0;
    while (std::getline(file, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        std::vector<double> parsed;
        while (std::getline(row, cell, ',')) parsed.push_back(std::strtod(cell.c_str(), nullptr));
        if (parsed.size() < 2) throw Error("malformed feature CSV row in " + path.string());
        if (m == 0) {
            m = parsed.size() - 1;
        } else if (parsed.size() - 1 != m) {
            throw Error("ragged feature CSV: " + path.string());
        }
        times.push_back(parsed[0]);
        values.insert(values.end(), parsed.begin() + 1, parsed.end());
    }
    if (times.empty()) throw Error("feature CSV has no data rows: " + path.string());

    FeatureMatrix features;
    features.X = RowMatrix(times.size(), m);
    features.X.values = std::move(values);
    features.window_times_s = std::move(times);
    return features;
}

FeatureMatrix load_features(const std::filesystem::path& path) {
    if (path.extension() == ".csv") return load_feature_csv(path);
    return load_feature_binary(path);
}

}  // namespace sva
