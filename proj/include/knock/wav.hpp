#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "knock/error.hpp"
#include "knock/signal.hpp"

namespace knock {

namespace detail {

inline std::uint32_t read_u32le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_u16le(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void write_u32le(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u16le(std::ostream& os, std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 2);
}

} // namespace detail

/**
 * Read a RIFF/WAVE file into a Signal.
 *
 * Accepts PCM 16-bit and IEEE float 32-bit, mono or stereo. Stereo is
 * downmixed by averaging the channels. PCM sample v maps to v/32768.
 * Chunks other than fmt/data are skipped.
 */
inline Signal read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);

    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw FormatError("not a RIFF/WAVE file: " + path);

    bool have_fmt = false;
    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    const unsigned char* data_ptr = nullptr;
    std::size_t data_len = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
        const std::uint32_t chunk_len = detail::read_u32le(bytes.data() + pos + 4);
        const std::size_t body = pos + 8;
        if (body + chunk_len > bytes.size())
            throw FormatError("truncated chunk in " + path);
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (chunk_len < 16) throw FormatError("fmt chunk too short in " + path);
            const unsigned char* f = bytes.data() + body;
            format = detail::read_u16le(f);
            channels = detail::read_u16le(f + 2);
            rate = detail::read_u32le(f + 4);
            bits = detail::read_u16le(f + 14);
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            data_ptr = bytes.data() + body;
            data_len = chunk_len;
        }
        pos = body + chunk_len + (chunk_len & 1); // chunks are word-aligned
    }

    if (!have_fmt || data_ptr == nullptr)
        throw FormatError("missing fmt or data chunk in " + path);
    if (channels != 1 && channels != 2)
        throw CodecError("unsupported channel count " + std::to_string(channels));
    if (rate == 0) throw FormatError("zero sample rate in " + path);

    const bool pcm16 = (format == 1 && bits == 16);
    const bool f32 = (format == 3 && bits == 32);
    if (!pcm16 && !f32)
        throw CodecError("unsupported encoding (format " + std::to_string(format) +
                         ", " + std::to_string(bits) + " bit) in " + path);

    const std::size_t bytes_per_sample = bits / 8;
    const std::size_t frame_bytes = bytes_per_sample * channels;
    const std::size_t frames = data_len / frame_bytes;
    if (frames == 0) throw EmptySignalError("zero-length data chunk in " + path);

    Signal sig;
    sig.sample_rate = static_cast<int>(rate);
    sig.samples.resize(frames);
    for (std::size_t i = 0; i < frames; ++i) {
        double acc = 0.0;
        for (std::uint16_t c = 0; c < channels; ++c) {
            const unsigned char* s = data_ptr + i * frame_bytes + c * bytes_per_sample;
            if (pcm16) {
                const std::int16_t v = static_cast<std::int16_t>(detail::read_u16le(s));
                acc += static_cast<double>(v) / 32768.0;
            } else {
                float fv;
                std::memcpy(&fv, s, 4);
                acc += static_cast<double>(fv);
            }
        }
        sig.samples[i] = acc / channels;
    }
    sig.validate();
    return sig;
}

/**
 * Write a Signal as mono PCM 16-bit. Amplitudes are clamped to [-1, 1]
 * before quantization; x maps to round(x * 32768) clamped to int16.
 */
inline void write_wav(const Signal& signal, const std::string& path) {
    signal.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);

    const std::uint32_t n = static_cast<std::uint32_t>(signal.size());
    const std::uint32_t data_bytes = n * 2;

    out.write("RIFF", 4);
    detail::write_u32le(out, 36 + data_bytes);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    detail::write_u32le(out, 16);
    detail::write_u16le(out, 1); // PCM
    detail::write_u16le(out, 1); // mono
    detail::write_u32le(out, static_cast<std::uint32_t>(signal.sample_rate));
    detail::write_u32le(out, static_cast<std::uint32_t>(signal.sample_rate) * 2);
    detail::write_u16le(out, 2);  // block align
    detail::write_u16le(out, 16); // bits
    out.write("data", 4);
    detail::write_u32le(out, data_bytes);

    for (double v : signal.samples) {
        double x = std::clamp(v, -1.0, 1.0);
        long q = std::lround(x * 32768.0);
        q = std::clamp(q, -32768L, 32767L);
        detail::write_u16le(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    }
    if (!out) throw IoError("write failed: " + path);
}

} // namespace knock
