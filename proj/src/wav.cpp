#include "sva/wav.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>

#include "sva/error.hpp"

namespace sva {

namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatIeeeFloat = 0x0003;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t fourcc(const char* s) {
    return static_cast<std::uint32_t>(static_cast<unsigned char>(s[0])) |
           static_cast<std::uint32_t>(static_cast<unsigned char>(s[1])) << 8 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(s[2])) << 16 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(s[3])) << 24;
}

// All on-disk fields are little-endian.
template <typename T>
T read_le(const std::uint8_t* p) {
    T value;
    std::memcpy(&value, p, sizeof(T));
    static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");
    return value;
}

template <typename T>
void append_le(std::string& out, T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

struct FmtInfo {
    std::uint16_t format = 0;
    std::uint16_t channels = 0;
    std::uint32_t sample_rate = 0;
    std::uint16_t bits = 0;
};

}  // namespace

WavData read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open audio file: " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (!in.good() && !in.eof()) throw Error("cannot read audio file: " + path.string());

    const auto* data = reinterpret_cast<const std::uint8_t*>(bytes.data());
    const std::size_t size = bytes.size();
    if (size < 12 || read_le<std::uint32_t>(data) != fourcc("RIFF") ||
        read_le<std::uint32_t>(data + 8) != fourcc("WAVE")) {
        throw Error("unsupported encoding in " + path.string() + ": not a RIFF/WAVE file");
    }

    FmtInfo fmt;
    bool have_fmt = false;
    const std::uint8_t* payload = nullptr;
    std::size_t payload_size = 0;

    std::size_t offset = 12;
    while (offset + 8 <= size) {
        const std::uint32_t chunk_id = read_le<std::uint32_t>(data + offset);
        const std::uint32_t chunk_size = read_le<std::uint32_t>(data + offset + 4);
        const std::size_t body = offset + 8;
        if (body + chunk_size > size) break;  // truncated trailing chunk
        if (chunk_id == fourcc("fmt ")) {
            if (chunk_size < 16) throw Error("unsupported encoding in " + path.string() + ": malformed fmt chunk");
            fmt.format = read_le<std::uint16_t>(data + body);
            fmt.channels = read_le<std::uint16_t>(data + body + 2);
            fmt.sample_rate = read_le<std::uint32_t>(data + body + 4);
            fmt.bits = read_le<std::uint16_t>(data + body + 14);
            if (fmt.format == kFormatExtensible && chunk_size >= 26) {
                // Sub-format GUID starts with the ordinary format tag.
                fmt.format = read_le<std::uint16_t>(data + body + 24);
            }
            have_fmt = true;
        } else if (chunk_id == fourcc("data")) {
            payload = data + body;
            payload_size = chunk_size;
        }
        offset = body + chunk_size + (chunk_size & 1);  // chunks are word-aligned
    }

    if (!have_fmt || payload == nullptr) {
        throw Error("unsupported encoding in " + path.string() + ": missing fmt or data chunk");
    }
    if (fmt.channels < 1 || fmt.channels > 2) {
        throw Error("unsupported encoding in " + path.string() + ": " + std::to_string(fmt.channels) +
                    " channels (expected 1 or 2)");
    }
    if (fmt.sample_rate == 0) throw Error("unsupported encoding in " + path.string() + ": zero sample rate");

    const bool pcm16 = fmt.format == kFormatPcm && fmt.bits == 16;
    const bool pcm32 = fmt.format == kFormatPcm && fmt.bits == 32;
    const bool f32 = fmt.format == kFormatIeeeFloat && fmt.bits == 32;
    const bool f64 = fmt.format == kFormatIeeeFloat && fmt.bits == 64;
    if (!pcm16 && !pcm32 && !f32 && !f64) {
        throw Error("unsupported encoding in " + path.string() + ": format tag " + std::to_string(fmt.format) +
                    " with " + std::to_string(fmt.bits) + " bits per sample");
    }

    const std::size_t bytes_per_sample = fmt.bits / 8;
    const std::size_t count = payload_size / bytes_per_sample;
    if (count == 0 || count < fmt.channels) throw Error("zero-length audio in " + path.string());

    WavData wav;
    wav.sample_rate_hz = fmt.sample_rate;
    wav.channels = fmt.channels;
    wav.interleaved.resize(count - count % fmt.channels);
    for (std::size_t i = 0; i < wav.interleaved.size(); ++i) {
        const std::uint8_t* p = payload + i * bytes_per_sample;
        if (pcm16) {
            wav.interleaved[i] = read_le<std::int16_t>(p) / 32768.0;
        } else if (pcm32) {
            wav.interleaved[i] = read_le<std::int32_t>(p) / 2147483648.0;
        } else if (f32) {
            wav.interleaved[i] = read_le<float>(p);
        } else {
            wav.interleaved[i] = read_le<double>(p);
        }
    }
    return wav;
}

void write_wav(const std::filesystem::path& path, const std::vector<double>& samples,
               std::uint32_t sample_rate_hz, WavEncoding encoding) {
    if (samples.empty()) throw Error("refusing to write zero-length audio to " + path.string());
    if (sample_rate_hz == 0) throw Error("refusing to write audio with zero sample rate to " + path.string());

    std::uint16_t bits = 16;
    std::uint16_t format = kFormatPcm;
    switch (encoding) {
        case WavEncoding::pcm16: bits = 16; format = kFormatPcm; break;
        case WavEncoding::pcm32: bits = 32; format = kFormatPcm; break;
        case WavEncoding::float32: bits = 32; format = kFormatIeeeFloat; break;
        case WavEncoding::float64: bits = 64; format = kFormatIeeeFloat; break;
    }
    const std::uint32_t bytes_per_sample = bits / 8;
    const std::uint32_t data_size = static_cast<std::uint32_t>(samples.size() * bytes_per_sample);

    std::string out;
    out.reserve(44 + data_size);
    append_le(out, fourcc("RIFF"));
    append_le(out, static_cast<std::uint32_t>(36 + data_size));
    append_le(out, fourcc("WAVE"));
    append_le(out, fourcc("fmt "));
    append_le(out, static_cast<std::uint32_t>(16));
    append_le(out, format);
    append_le(out, static_cast<std::uint16_t>(1));  // mono
    append_le(out, sample_rate_hz);
    append_le(out, sample_rate_hz * bytes_per_sample);
    append_le(out, static_cast<std::uint16_t>(bytes_per_sample));
    append_le(out, bits);
    append_le(out, fourcc("data"));
    append_le(out, data_size);

    for (const double s : samples) {
        switch (encoding) {
            case WavEncoding::pcm16: {
                const double scaled = std::nearbyint(s * 32768.0);
                const auto v = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
                append_le(out, v);
                break;
            }
            case WavEncoding::pcm32: {
                const double scaled = std::nearbyint(s * 2147483648.0);
                const auto v = static_cast<std::int32_t>(std::clamp(scaled, -2147483648.0, 2147483647.0));
                append_le(out, v);
                break;
            }
            case WavEncoding::float32:
                append_le(out, static_cast<float>(s));
                break;
            case WavEncoding::float64:
                append_le(out, s);
                break;
        }
    }

    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw Error("cannot open output file for writing: " + path.string());
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!file) throw Error("failed writing audio to " + path.string());
}

}  // namespace sva
