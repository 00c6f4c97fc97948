#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sva/audio.hpp"

namespace sva {

/// Harmonic engine signature of one vehicle.
struct VehicleSpec {
    std::string label;
    double fundamental_hz = 0.0;
    std::vector<double> harmonic_amps;  // relative amplitude per harmonic (1st = fundamental)
    double broadband_level = 0.0;       // signature noise floor, relative to the harmonic stack
};

/// One pass-by recording to synthesize.
struct PassageSpec {
    VehicleSpec vehicle;
    double duration_s = 0.0;
    double closest_approach_s = 0.0;
    double speed_mps = 0.0;
    double lateral_offset_m = 5.0;                // perpendicular microphone distance
    std::optional<double> background_snr_db;      // nullopt = noise-free background
    double wind_level = 0.0;                      // low-frequency background components
    bool doppler = true;
    std::uint64_t seed = 0;
    std::optional<Role> role;  // defaults to train for the first passage per vehicle
};

struct LabeledSignal {
    AudioSignal signal;
    LabelTrack labels;
};

/// Synthesize one passage: a stack of harmonics whose instantaneous
/// frequencies follow the moving-source Doppler law along a straight
/// drive-by, an inverse-distance amplitude envelope peaking at the closest
/// approach, optional wind components pinned to low-frequency analysis bins,
/// and seeded white background noise at the requested SNR. Bit-identical for
/// identical specs.
LabeledSignal synth_passage(const PassageSpec& spec, std::uint32_t sample_rate_hz);

/// A full synthetic recording session.
struct Scenario {
    std::uint32_t sample_rate_hz = 48000;
    double crop_s = 2.0;
    std::vector<PassageSpec> passages;

    static Scenario load(const std::filesystem::path& path);
};

/// Built-in session: three vehicles with distinct harmonic signatures, four
/// passages each. Per-passage seeds derive from `seed`.
Scenario make_default_scenario(std::uint64_t seed);

/// Synthesize every passage into out_dir as 16-bit PCM WAVs and return a
/// manifest that crops crop_s seconds centered on each closest approach.
/// When a passage does not pin a role, the first passage of each vehicle is
/// the training one. The manifest is also written to out_dir/manifest.json.
SegmentManifest synth_dataset(const Scenario& scenario, const std::filesystem::path& out_dir, unsigned threads = 1);

}  // namespace sva
