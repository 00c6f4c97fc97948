#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace sva {

/// Uniformly sampled mono signal, amplitudes nominally in [-1, 1].
struct AudioSignal {
    std::vector<double> samples;
    std::uint32_t sample_rate_hz = 0;

    double duration_s() const {
        return sample_rate_hz == 0 ? 0.0 : static_cast<double>(samples.size()) / sample_rate_hz;
    }
};

/// How to fold a multi-channel file down to mono.
struct ChannelPolicy {
    enum class Mode { average, select };
    Mode mode = Mode::average;
    std::size_t index = 0;

    static ChannelPolicy average() { return {Mode::average, 0}; }
    static ChannelPolicy select(std::size_t channel) { return {Mode::select, channel}; }
};

/// Load a WAV file as mono. Channels are scaled to [-1, 1] first, then
/// averaged (or one selected) per the policy.
AudioSignal load_audio(const std::filesystem::path& path, ChannelPolicy policy = ChannelPolicy::average());

/// Subtract the mean so the result has zero mean (within 1e-12). Idempotent.
AudioSignal remove_dc(AudioSignal signal);

/// Samples in [floor(start_s*rate), floor(end_s*rate)).
AudioSignal crop(const AudioSignal& signal, double start_s, double end_s);

enum class Role { train, test };

Role parse_role(const std::string& text);
std::string role_name(Role role);

/// One cropped, labeled slice of a source recording.
struct ManifestEntry {
    std::string source;
    std::string label;  // empty = unlabeled
    double start_s = 0.0;
    double end_s = 0.0;
    Role role = Role::test;
};

struct SegmentManifest {
    std::vector<ManifestEntry> entries;

    static SegmentManifest load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    /// Sorted unique non-empty labels.
    std::vector<std::string> classes() const;
};

/// Half-open labeled frame ranges covering a composite signal.
struct LabelRun {
    std::size_t begin_frame = 0;
    std::size_t end_frame = 0;
    std::string label;
    Role role = Role::test;
};

struct LabelTrack {
    std::vector<LabelRun> runs;

    /// Label at one frame (empty string when uncovered).
    const LabelRun* run_at(std::size_t frame) const;
};

struct CompositeSignal {
    AudioSignal signal;
    LabelTrack labels;
};

/// Load, crop and concatenate every manifest entry in order. Source paths
/// are resolved relative to `base_dir`. All sources must share one sample
/// rate.
CompositeSignal composite(const SegmentManifest& manifest, const std::filesystem::path& base_dir);

/// Consecutive fixed-length analysis windows (rows), trailing partial window
/// discarded.
struct WindowedSignal {
    std::size_t window_len_frames = 0;
    std::size_t hop_frames = 0;
    std::uint32_t source_rate_hz = 0;
    std::size_t count = 0;
    std::vector<double> data;  // count x window_len_frames, row-major
    std::vector<double> window_times_s;

    std::span<const double> row(std::size_t i) const {
        return {data.data() + i * window_len_frames, window_len_frames};
    }
};

/// Partition `signal` into windows of `window_len_frames` frames advancing by
/// `hop_frames` (0 = no overlap). Errors if not even one window fits.
WindowedSignal window(const AudioSignal& signal, std::size_t window_len_frames, std::size_t hop_frames = 0);

/// Per-window labels by majority vote over each window's frames; ties go to
/// the earlier run. Windows fully outside the track get an empty label.
struct WindowLabel {
    std::string label;
    Role role = Role::test;
};
std::vector<WindowLabel> window_labels(const LabelTrack& track, const WindowedSignal& windows);

// Window-label persistence (CSV header window_index,time_s,label,role).
void save_window_labels_csv(std::span<const double> window_times_s, std::span<const WindowLabel> labels,
                            const std::filesystem::path& path);
struct LoadedWindowLabels {
    std::vector<double> window_times_s;
    std::vector<WindowLabel> labels;
};
LoadedWindowLabels load_window_labels_csv(const std::filesystem::path& path);

}  // namespace sva
