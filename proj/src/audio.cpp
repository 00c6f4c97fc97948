#include "sva/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sva/error.hpp"
#include "sva/kernels.hpp"
#include "sva/wav.hpp"

namespace sva {

AudioSignal load_audio(const std::filesystem::path& path, ChannelPolicy policy) {
    const WavData wav = read_wav(path);
    const std::size_t frames = wav.frames();
    if (frames == 0) throw Error("zero-length audio in " + path.string());

    AudioSignal signal;
    signal.sample_rate_hz = wav.sample_rate_hz;
    signal.samples.resize(frames);

    if (wav.channels == 1) {
        std::copy(wav.interleaved.begin(), wav.interleaved.end(), signal.samples.begin());
        return signal;
    }
    if (policy.mode == ChannelPolicy::Mode::select) {
        if (policy.index >= wav.channels) {
            throw Error("channel " + std::to_string(policy.index) + " requested but " + path.string() + " has " +
                        std::to_string(wav.channels) + " channels");
        }
        for (std::size_t f = 0; f < frames; ++f) {
            signal.samples[f] = wav.interleaved[f * wav.channels + policy.index];
        }
        return signal;
    }
    const double inv = 1.0 / wav.channels;
    for (std::size_t f = 0; f < frames; ++f) {
        double acc = 0.0;
        for (std::size_t c = 0; c < wav.channels; ++c) acc += wav.interleaved[f * wav.channels + c];
        signal.samples[f] = acc * inv;
    }
    return signal;
}

AudioSignal remove_dc(AudioSignal signal) {
    if (signal.samples.empty()) throw Error("remove_dc: empty signal");
    const double mean = kernels::sum(signal.samples.data(), signal.samples.size()) /
                        static_cast<double>(signal.samples.size());
    kernels::add_scalar(signal.samples.data(), signal.samples.size(), -mean);
    return signal;
}

AudioSignal crop(const AudioSignal& signal, double start_s, double end_s) {
    const double duration = signal.duration_s();
    if (!(start_s >= 0.0) || !(end_s <= duration) || !(start_s < end_s)) {
        throw Error("crop bounds [" + std::to_string(start_s) + ", " + std::to_string(end_s) +
                    ") invalid for a " + std::to_string(duration) + " s signal");
    }
    const auto begin = static_cast<std::size_t>(std::floor(start_s * signal.sample_rate_hz));
    const auto end = static_cast<std::size_t>(std::floor(end_s * signal.sample_rate_hz));
    AudioSignal out;
    out.sample_rate_hz = signal.sample_rate_hz;
    out.samples.assign(signal.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                       signal.samples.begin() + static_cast<std::ptrdiff_t>(end));
    return out;
}

Role parse_role(const std::string& text) {
    if (text == "train") return Role::train;
    if (text == "test") return Role::test;
    throw Error("unknown role '" + text + "' (expected train or test)");
}

std::string role_name(Role role) { return role == Role::train ? "train" : "test"; }

SegmentManifest SegmentManifest::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open manifest: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw Error("malformed manifest " + path.string() + ": " + e.what());
    }
    if (!doc.is_array()) throw Error("manifest " + path.string() + " must be a JSON array of entries");

    SegmentManifest manifest;
    for (const auto& item : doc) {
        ManifestEntry entry;
        try {
            entry.source = item.at("source").get<std::string>();
            entry.start_s = item.at("start_s").get<double>();
            entry.end_s = item.at("end_s").get<double>();
            if (item.contains("label") && !item["label"].is_null()) entry.label = item["label"].get<std::string>();
            if (item.contains("role")) entry.role = parse_role(item["role"].get<std::string>());
        } catch (const nlohmann::json::exception& e) {
            throw Error("malformed manifest entry in " + path.string() + ": " + e.what());
        }
        if (!(entry.start_s < entry.end_s)) {
            throw Error("manifest entry for " + entry.source + " has start_s >= end_s");
        }
        manifest.entries.push_back(std::move(entry));
    }
    return manifest;
}

void SegmentManifest::save(const std::filesystem::path& path) const {
    nlohmann::json doc = nlohmann::json::array();
    for (const auto& entry : entries) {
        nlohmann::json item;
        item["source"] = entry.source;
        if (!entry.label.empty()) item["label"] = entry.label;
        item["start_s"] = entry.start_s;
        item["end_s"] = entry.end_s;
        item["role"] = role_name(entry.role);
        doc.push_back(std::move(item));
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write manifest: " + path.string());
    out << doc.dump(2) << '\n';
}

std::vector<std::string> SegmentManifest::classes() const {
    std::set<std::string> unique;
    for (const auto& entry : entries) {
        if (!entry.label.empty()) unique.insert(entry.label);
    }
    return {unique.begin(), unique.end()};
}

const LabelRun* LabelTrack::run_at(std::size_t frame) const {
    for (const auto& run : runs) {
        if (frame >= run.begin_frame && frame < run.end_frame) return &run;
    }
    return nullptr;
}

CompositeSignal composite(const SegmentManifest& manifest, const std::filesystem::path& base_dir) {
    if (manifest.entries.empty()) throw Error("composite: manifest has no entries");

    CompositeSignal out;
    for (const auto& entry : manifest.entries) {
        std::filesystem::path source(entry.source);
        if (source.is_relative()) source = base_dir / source;
        const AudioSignal full = load_audio(source);
        const AudioSignal segment = crop(full, entry.start_s, entry.end_s);

        if (out.signal.sample_rate_hz == 0) {
            out.signal.sample_rate_hz = segment.sample_rate_hz;
        } else if (out.signal.sample_rate_hz != segment.sample_rate_hz) {
            throw Error("sample rate mismatch in composite: " + source.string() + " has " +
                        std::to_string(segment.sample_rate_hz) + " Hz, expected " +
                        std::to_string(out.signal.sample_rate_hz) + " Hz");
        }

        LabelRun run;
        run.begin_frame = out.signal.samples.size();
        run.end_frame = run.begin_frame + segment.samples.size();
        run.label = entry.label;
        run.role = entry.role;
        out.labels.runs.push_back(std::move(run));
        out.signal.samples.insert(out.signal.samples.end(), segment.samples.begin(), segment.samples.end());
    }
    return out;
}

WindowedSignal window(const AudioSignal& signal, std::size_t window_len_frames, std::size_t hop_frames) {
    if (window_len_frames < 2) throw Error("window length must be at least 2 frames");
    if (hop_frames == 0) hop_frames = window_len_frames;
    if (signal.samples.size() < window_len_frames) {
        throw Error("window of " + std::to_string(window_len_frames) + " frames is longer than the signal (" +
                    std::to_string(signal.samples.size()) + " frames)");
    }

    WindowedSignal out;
    out.window_len_frames = window_len_frames;
    out.hop_frames = hop_frames;
    out.source_rate_hz = signal.sample_rate_hz;
    out.count = (signal.samples.size() - window_len_frames) / hop_frames + 1;
    out.data.resize(out.count * window_len_frames);
    out.window_times_s.resize(out.count);
    for (std::size_t i = 0; i < out.count; ++i) {
        const std::size_t begin = i * hop_frames;
        std::copy_n(signal.samples.begin() + static_cast<std::ptrdiff_t>(begin), window_len_frames,
                    out.data.begin() + static_cast<std::ptrdiff_t>(i * window_len_frames));
        out.window_times_s[i] = static_cast<double>(begin) / signal.sample_rate_hz;
    }
    return out;
}

void save_window_labels_csv(std::span<const double> window_times_s, std::span<const WindowLabel> labels,
                            const std::filesystem::path& path) {
    if (window_times_s.size() != labels.size()) throw Error("label CSV: column lengths differ");
    std::string out = "window_index,time_s,label,role\n";
    char buf[32];
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out += std::to_string(i);
        std::snprintf(buf, sizeof buf, ",%.17g,", window_times_s[i]);
        out += buf;
        out += labels[i].label;
        out += ',';
        out += role_name(labels[i].role);
        out += '\n';
    }
    std::ofstream file(path, std::ios::trunc);
    if (!file) throw Error("cannot write label CSV: " + path.string());
    file << out;
    if (!file) throw Error("failed writing label CSV: " + path.string());
}

LoadedWindowLabels load_window_labels_csv(const std::filesystem::path& path) {
    std::ifstream file(path);
    if (!file) throw Error("cannot open label CSV: " + path.string());
    std::string line;
    if (!std::getline(file, line)) throw Error("empty label CSV: " + path.string());

    LoadedWindowLabels loaded;
    while (std::getline(file, line)) {
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string index, time_s, label, role;
        if (!std::getline(row, index, ',') || !std::getline(row, time_s, ',') || !std::getline(row, label, ',') ||
            !std::getline(row, role, ',')) {
            throw Error("malformed label CSV row in " + path.string());
        }
        loaded.window_times_s.push_back(std::strtod(time_s.c_str(), nullptr));
        loaded.labels.push_back({label, parse_role(role)});
    }
    if (loaded.labels.empty()) throw Error("label CSV has no data rows: " + path.string());
    return loaded;
}

std::vector<WindowLabel> window_labels(const LabelTrack& track, const WindowedSignal& windows) {
    std::vector<WindowLabel> out(windows.count);
    for (std::size_t i = 0; i < windows.count; ++i) {
        const std::size_t begin = i * windows.hop_frames;
        const std::size_t end = begin + windows.window_len_frames;
        // Majority vote by overlap; ties resolved in favor of the earlier run.
        const LabelRun* best = nullptr;
        std::size_t best_overlap = 0;
        for (const auto& run : track.runs) {
            const std::size_t lo = std::max(begin, run.begin_frame);
            const std::size_t hi = std::min(end, run.end_frame);
            const std::size_t overlap = hi > lo ? hi - lo : 0;
            if (overlap > best_overlap) {
                best_overlap = overlap;
                best = &run;
            }
        }
        if (best != nullptr) out[i] = {best->label, best->role};
    }
    return out;
}

}  // namespace sva
