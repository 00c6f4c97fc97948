#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace sva {

/// Raw decoded WAV payload: interleaved samples scaled to [-1, 1].
struct WavData {
    std::uint32_t sample_rate_hz = 0;
    std::uint16_t channels = 0;
    std::vector<double> interleaved;

    std::size_t frames() const { return channels == 0 ? 0 : interleaved.size() / channels; }
};

enum class WavEncoding {
    pcm16,    // 16-bit signed PCM, scaled by 1/32768
    pcm32,    // 32-bit signed PCM, scaled by 1/2147483648
    float32,  // IEEE float
    float64,  // IEEE double; lossless for analysis round trips
};

/// Decode a RIFF/WAVE file. Accepts 16/32-bit integer PCM and 32/64-bit IEEE
/// float, 1 or 2 channels. Unreadable files, unsupported encodings and
/// zero-length payloads raise distinct errors.
WavData read_wav(const std::filesystem::path& path);

/// Write mono samples as a WAV file in the requested encoding. Integer
/// encodings clamp to full scale.
void write_wav(const std::filesystem::path& path, const std::vector<double>& samples,
               std::uint32_t sample_rate_hz, WavEncoding encoding = WavEncoding::pcm16);

}  // namespace sva
