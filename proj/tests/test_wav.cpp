#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <fstream>

#include "knock/rng.hpp"
#include "knock/signal.hpp"
#include "knock/wav.hpp"
#include "oracles.hpp"

using namespace knock;
using Catch::Approx;

namespace {

// hand-rolled WAV writer so the reader is not tested against itself
void write_raw_wav(const std::string& path, const std::vector<std::int16_t>& pcm,
                   std::uint16_t channels, std::uint32_t rate) {
    std::ofstream out(path, std::ios::binary);
    const std::uint32_t data_bytes = static_cast<std::uint32_t>(pcm.size() * 2);
    auto u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<char*>(&v), 4); };
    auto u16 = [&](std::uint16_t v) { out.write(reinterpret_cast<char*>(&v), 2); };
    out.write("RIFF", 4);
    u32(36 + data_bytes);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    u32(16);
    u16(1);
    u16(channels);
    u32(rate);
    u32(rate * 2 * channels);
    u16(static_cast<std::uint16_t>(2 * channels));
    u16(16);
    out.write("data", 4);
    u32(data_bytes);
    for (std::int16_t v : pcm) out.write(reinterpret_cast<char*>(&v), 2);
}

} // namespace

TEST_CASE("read_wav decodes PCM16 with exact scaling", "[wav]") {
    oracle::TempDir dir("wav_pcm16");
    write_raw_wav(dir.file("a.wav"), {0, 16384, -16384}, 1, 22050);
    const Signal s = read_wav(dir.file("a.wav"));
    REQUIRE(s.samples.size() == 3);
    CHECK(s.sample_rate == 22050);
    CHECK(s.samples[0] == 0.0);
    CHECK(s.samples[1] == 0.5);
    CHECK(s.samples[2] == -0.5);
}

TEST_CASE("read_wav downmixes stereo by averaging", "[wav]") {
    oracle::TempDir dir("wav_stereo");
    write_raw_wav(dir.file("st.wav"), {16384, 0, -16384, -16384}, 2, 8000);
    const Signal s = read_wav(dir.file("st.wav"));
    REQUIRE(s.samples.size() == 2);
    CHECK(s.samples[0] == Approx(0.25));
    CHECK(s.samples[1] == Approx(-0.5));
}

TEST_CASE("read_wav error paths", "[wav]") {
    oracle::TempDir dir("wav_errors");

    SECTION("missing file") {
        CHECK_THROWS_AS(read_wav(dir.file("nope.wav")), IoError);
    }
    SECTION("malformed header") {
        std::ofstream(dir.file("bad.wav")) << "definitely not RIFF data";
        CHECK_THROWS_AS(read_wav(dir.file("bad.wav")), FormatError);
    }
    SECTION("zero-length data chunk") {
        write_raw_wav(dir.file("empty.wav"), {}, 1, 22050);
        CHECK_THROWS_AS(read_wav(dir.file("empty.wav")), EmptySignalError);
    }
    SECTION("unsupported codec (8-bit)") {
        std::ofstream out(dir.file("u8.wav"), std::ios::binary);
        auto u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<char*>(&v), 4); };
        auto u16 = [&](std::uint16_t v) { out.write(reinterpret_cast<char*>(&v), 2); };
        out.write("RIFF", 4);
        u32(36 + 2);
        out.write("WAVE", 4);
        out.write("fmt ", 4);
        u32(16);
        u16(1);
        u16(1);
        u32(8000);
        u32(8000);
        u16(1);
        u16(8); // 8-bit PCM: unsupported
        out.write("data", 4);
        u32(2);
        u16(0x8080);
        out.close();
        CHECK_THROWS_AS(read_wav(dir.file("u8.wav")), CodecError);
    }
}

TEST_CASE("write_wav quantization rules", "[wav]") {
    oracle::TempDir dir("wav_write");

    SECTION("single zero sample produces a 2-byte data chunk") {
        Signal s;
        s.sample_rate = 22050;
        s.samples = {0.0};
        write_wav(s, dir.file("zero.wav"));
        std::ifstream in(dir.file("zero.wav"), std::ios::binary);
        std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
        REQUIRE(bytes.size() == 44 + 2);
        CHECK(bytes[44] == 0);
        CHECK(bytes[45] == 0);
        const Signal back = read_wav(dir.file("zero.wav"));
        CHECK(back.samples == std::vector<double>{0.0});
    }

    SECTION("out-of-range amplitude clamps to 32767") {
        Signal s;
        s.sample_rate = 22050;
        s.samples = {1.5};
        write_wav(s, dir.file("clip.wav"));
        std::ifstream in(dir.file("clip.wav"), std::ios::binary);
        in.seekg(44);
        std::int16_t v;
        in.read(reinterpret_cast<char*>(&v), 2);
        CHECK(v == 32767);
    }

    SECTION("unwritable path") {
        Signal s;
        s.sample_rate = 22050;
        s.samples = {0.0};
        CHECK_THROWS_AS(write_wav(s, dir.file("no/such/dir/out.wav")), IoError);
    }
}

TEST_CASE("wav round trip over random clips", "[wav]") {
    oracle::TempDir dir("wav_roundtrip");
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        Signal s;
        s.sample_rate = 22050;
        s.samples.resize(1 + static_cast<std::size_t>(rng.uniform_int(0, 499)));
        for (auto& v : s.samples) v = rng.uniform(-1.0, 1.0);

        const std::string path = dir.file("rt.wav");
        write_wav(s, path);
        const Signal once = read_wav(path);
        REQUIRE(once.samples.size() == s.samples.size());
        for (std::size_t i = 0; i < s.samples.size(); ++i)
            REQUIRE(std::abs(once.samples[i] - s.samples[i]) <= 1.0 / 32768.0);

        // second round trip reproduces the first exactly (contraction)
        write_wav(once, path);
        const Signal twice = read_wav(path);
        REQUIRE(twice.samples == once.samples);
    }
}
