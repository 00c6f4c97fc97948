#include "sva/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>

#include <nlohmann/json.hpp>

#include "sva/error.hpp"
#include "sva/kernels.hpp"
#include "sva/rng.hpp"
#include "sva/threading.hpp"
#include "sva/wav.hpp"

namespace sva {

namespace {

constexpr double kSpeedOfSound = 343.0;  // m/s
constexpr double kPeakTarget = 0.97;     // headroom against PCM clipping

void validate(const PassageSpec& spec) {
    if (spec.vehicle.label.empty()) throw Error("synth: vehicle label must not be empty");
    if (!(spec.vehicle.fundamental_hz > 0.0)) throw Error("synth: fundamental frequency must be positive");
    const bool any_positive = std::any_of(spec.vehicle.harmonic_amps.begin(), spec.vehicle.harmonic_amps.end(),
                                          [](double a) { return a > 0.0; });
    if (!any_positive) throw Error("synth: vehicle '" + spec.vehicle.label + "' needs a positive harmonic amplitude");
    if (!(spec.duration_s > 0.0) || !(spec.closest_approach_s > 0.0) ||
        !(spec.closest_approach_s < spec.duration_s)) {
        throw Error("synth: closest approach must fall strictly inside the passage duration");
    }
    if (spec.speed_mps < 0.0) throw Error("synth: speed must be nonnegative");
    if (!(spec.lateral_offset_m > 0.0)) throw Error("synth: lateral offset must be positive");
    if (spec.wind_level < 0.0) throw Error("synth: wind level must be nonnegative");
}

}  // namespace

LabeledSignal synth_passage(const PassageSpec& spec, std::uint32_t sample_rate_hz) {
    validate(spec);
    if (sample_rate_hz == 0) throw Error("synth: sample rate must be positive");

    const auto frames = static_cast<std::size_t>(std::llround(spec.duration_s * sample_rate_hz));
    const double dt = 1.0 / sample_rate_hz;
    const std::size_t harmonics = spec.vehicle.harmonic_amps.size();

    std::mt19937_64 rng(mix_seed(spec.seed, 0));

    AudioSignal signal;
    signal.sample_rate_hz = sample_rate_hz;
    signal.samples.assign(frames, 0.0);

    // Straight drive-by geometry: position v*(t - t_ca) along the road,
    // lateral offset p; the radial velocity dr/dt drives the moving-source
    // Doppler factor c / (c + v_r) (positive v_r = receding).
    std::vector<double> phase(harmonics, 0.0);
    for (std::size_t h = 0; h < harmonics; ++h) {
        phase[h] = 2.0 * std::numbers::pi * uniform_unit(rng);  // random start phases
    }
    const double p2 = spec.lateral_offset_m * spec.lateral_offset_m;
    for (std::size_t t = 0; t < frames; ++t) {
        const double rel = static_cast<double>(t) * dt - spec.closest_approach_s;
        const double x = spec.speed_mps * rel;
        const double r = std::sqrt(p2 + x * x);
        const double radial_velocity = spec.speed_mps * spec.speed_mps * rel / r;
        const double doppler = spec.doppler ? kSpeedOfSound / (kSpeedOfSound + radial_velocity) : 1.0;
        const double envelope = spec.lateral_offset_m / r;  // peaks at 1 when closest

        double sample = 0.0;
        for (std::size_t h = 0; h < harmonics; ++h) {
            const double amp = spec.vehicle.harmonic_amps[h];
            if (amp != 0.0) sample += amp * std::sin(phase[h]);
            const double inst_freq = static_cast<double>(h + 1) * spec.vehicle.fundamental_hz * doppler;
            phase[h] += 2.0 * std::numbers::pi * inst_freq * dt;
        }
        if (spec.vehicle.broadband_level > 0.0) sample += spec.vehicle.broadband_level * normal(rng);
        signal.samples[t] = sample * envelope;
    }

    // Wind components sit exactly on low analysis bins (multiples of 8 Hz for
    // the 1/8 s default window), i.e. inside the first 130 coefficients.
    if (spec.wind_level > 0.0) {
        std::mt19937_64 wind_rng(mix_seed(spec.seed, 1));
        constexpr std::size_t kWindComponents = 24;
        for (std::size_t c = 0; c < kWindComponents; ++c) {
            const double bin = 2.0 + static_cast<double>(uniform_below(wind_rng, 126));  // bins 2..127
            const double freq = bin * 8.0;
            const double amp = spec.wind_level * (2.0 / (1.0 + 0.08 * bin));
            const double phi = 2.0 * std::numbers::pi * uniform_unit(wind_rng);
            for (std::size_t t = 0; t < frames; ++t) {
                signal.samples[t] += amp * std::sin(2.0 * std::numbers::pi * freq * t * dt + phi);
            }
        }
    }

    if (spec.background_snr_db.has_value()) {
        const double signal_power =
            kernels::sumsq(signal.samples.data(), frames) / static_cast<double>(frames);
        const double noise_power = signal_power / std::pow(10.0, *spec.background_snr_db / 10.0);
        const double noise_std = std::sqrt(noise_power);
        std::mt19937_64 noise_rng(mix_seed(spec.seed, 2));
        for (std::size_t t = 0; t < frames; ++t) signal.samples[t] += noise_std * normal(noise_rng);
    }

    double peak = 0.0;
    for (const double s : signal.samples) peak = std::max(peak, std::abs(s));
    if (peak > 0.0) kernels::scale(signal.samples.data(), frames, kPeakTarget / peak);

    LabeledSignal out;
    out.signal = std::move(signal);
    out.labels.runs.push_back({0, frames, spec.vehicle.label, spec.role.value_or(Role::test)});
    return out;
}

Scenario Scenario::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open scenario: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw Error("malformed scenario " + path.string() + ": " + e.what());
    }

    Scenario scenario;
    try {
        scenario.sample_rate_hz = doc.value("sample_rate_hz", 48000u);
        scenario.crop_s = doc.value("crop_s", 2.0);

        std::map<std::string, VehicleSpec> vehicles;
        for (const auto& v : doc.at("vehicles")) {
            VehicleSpec vehicle;
            vehicle.label = v.at("label").get<std::string>();
            vehicle.fundamental_hz = v.at("fundamental_hz").get<double>();
            vehicle.harmonic_amps = v.at("harmonic_amps").get<std::vector<double>>();
            vehicle.broadband_level = v.value("broadband_level", 0.0);
            vehicles[vehicle.label] = std::move(vehicle);
        }

        for (const auto& p : doc.at("passages")) {
            PassageSpec passage;
            const auto label = p.at("vehicle").get<std::string>();
            const auto it = vehicles.find(label);
            if (it == vehicles.end()) throw Error("scenario references unknown vehicle '" + label + "'");
            passage.vehicle = it->second;
            passage.duration_s = p.at("duration_s").get<double>();
            passage.closest_approach_s = p.at("closest_approach_s").get<double>();
            passage.speed_mps = p.value("speed_mps", 6.7);
            passage.lateral_offset_m = p.value("lateral_offset_m", 5.0);
            if (p.contains("background_snr_db") && !p["background_snr_db"].is_null()) {
                passage.background_snr_db = p["background_snr_db"].get<double>();
            }
            passage.wind_level = p.value("wind_level", 0.0);
            passage.doppler = p.value("doppler", true);
            passage.seed = p.value("seed", 0ull);
            if (p.contains("role")) passage.role = parse_role(p["role"].get<std::string>());
            scenario.passages.push_back(std::move(passage));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error("malformed scenario " + path.string() + ": " + e.what());
    }
    return scenario;
}

Scenario make_default_scenario(std::uint64_t seed) {
    Scenario scenario;
    scenario.sample_rate_hz = 48000;
    scenario.crop_s = 2.0;

    // Harmonic stacks stay below ~400 Hz so the pass-by Doppler shift is a
    // fraction of one 8 Hz analysis bin and each vehicle forms one tight
    // cluster of windows.
    std::vector<VehicleSpec> vehicles;
    vehicles.push_back({"white_truck", 48.0, {1.0, 0.85, 0.72, 0.61, 0.52, 0.44}, 0.012});
    vehicles.push_back({"black_truck", 72.0, {0.85, 1.0, 0.5, 0.65, 0.3}, 0.020});
    vehicles.push_back({"jeep", 112.0, {1.0, 0.45, 0.62, 0.28}, 0.040});

    constexpr std::size_t kPassagesPerVehicle = 4;
    std::uint64_t stream = 0;
    for (const auto& vehicle : vehicles) {
        for (std::size_t p = 0; p < kPassagesPerVehicle; ++p) {
            PassageSpec passage;
            passage.vehicle = vehicle;
            passage.duration_s = 12.0;
            passage.closest_approach_s = 6.0;
            passage.speed_mps = 6.7;  // roughly 15 mph
            passage.lateral_offset_m = 10.0;
            passage.background_snr_db = 26.0;
            passage.doppler = false;
            passage.seed = mix_seed(seed, stream++);
            scenario.passages.push_back(std::move(passage));
        }
    }
    return scenario;
}

SegmentManifest synth_dataset(const Scenario& scenario, const std::filesystem::path& out_dir, unsigned threads) {
    if (scenario.passages.empty()) throw Error("synth: scenario has no passages");
    if (!(scenario.crop_s > 0.0)) throw Error("synth: crop length must be positive");
    {
        std::set<std::string> labels;
        for (const auto& p : scenario.passages) labels.insert(p.vehicle.label);
        if (labels.size() < 2) throw Error("synth: classification experiments need at least 2 distinct vehicles");
    }

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error("cannot create output directory " + out_dir.string() + ": " + ec.message());

    // Deterministic file names: <label>_<ordinal>.wav in passage order.
    std::vector<std::string> names(scenario.passages.size());
    std::map<std::string, std::size_t> ordinal;
    for (std::size_t i = 0; i < scenario.passages.size(); ++i) {
        const auto& label = scenario.passages[i].vehicle.label;
        names[i] = label + "_" + std::to_string(ordinal[label]++) + ".wav";
    }

    parallel_chunks(0, scenario.passages.size(), threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const LabeledSignal passage = synth_passage(scenario.passages[i], scenario.sample_rate_hz);
            write_wav(out_dir / names[i], passage.signal.samples, scenario.sample_rate_hz, WavEncoding::pcm16);
        }
    });

    SegmentManifest manifest;
    std::set<std::string> trained;
    for (std::size_t i = 0; i < scenario.passages.size(); ++i) {
        const auto& spec = scenario.passages[i];
        ManifestEntry entry;
        entry.source = names[i];
        entry.label = spec.vehicle.label;
        const double half = std::min({scenario.crop_s / 2.0, spec.closest_approach_s,
                                      spec.duration_s - spec.closest_approach_s});
        entry.start_s = spec.closest_approach_s - half;
        entry.end_s = spec.closest_approach_s + half;
        if (spec.role.has_value()) {
            entry.role = *spec.role;
        } else {
            entry.role = trained.contains(spec.vehicle.label) ? Role::test : Role::train;
        }
        if (entry.role == Role::train) trained.insert(spec.vehicle.label);
        manifest.entries.push_back(std::move(entry));
    }
    manifest.save(out_dir / "manifest.json");
    return manifest;
}

}  // namespace sva
