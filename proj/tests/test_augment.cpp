#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "knock/augment.hpp"
#include "knock/fft.hpp"
#include "oracles.hpp"

using namespace knock;
using Catch::Approx;

namespace {

Signal random_clip(std::uint64_t seed, std::size_t len = 5000) {
    Rng rng(seed);
    Signal s;
    s.sample_rate = 22050;
    s.samples.resize(len);
    for (auto& v : s.samples) v = rng.uniform(-0.9, 0.9);
    return s;
}

double band_energy(const Signal& s, double lo_hz, double hi_hz) {
    const std::size_t n = next_pow2(s.size());
    std::vector<std::complex<double>> a(n, 0.0);
    for (std::size_t i = 0; i < s.size(); ++i) a[i] = s.samples[i];
    fft_inplace(a);
    double acc = 0.0;
    for (std::size_t k = 1; k <= n / 2; ++k) {
        const double f = static_cast<double>(k) * s.sample_rate / static_cast<double>(n);
        if (f >= lo_hz && f <= hi_hz) acc += std::norm(a[k]);
    }
    return acc;
}

} // namespace

TEST_CASE("AugmentParams draws stay in the published ranges", "[augment]") {
    Rng rng(77);
    for (int i = 0; i < 1000; ++i) {
        const AugmentParams p = AugmentParams::draw(rng);
        CHECK(p.stretch_factor >= 0.8);
        CHECK(p.stretch_factor <= 1.2);
        CHECK(p.shift_samples >= -1000);
        CHECK(p.shift_samples <= 1000);
        CHECK(p.pitch_semitones >= -3);
        CHECK(p.pitch_semitones <= 3);
        CHECK(p.compression_factor >= 0.1);
        CHECK(p.compression_factor <= 0.5);
        CHECK(p.noise_factor >= 0.0);
        CHECK(p.noise_factor <= 0.05);
        CHECK(p.shift_fraction >= -0.1);
        CHECK(p.shift_fraction <= 0.1);
        CHECK(p.filter_factor >= 10);
        CHECK(p.filter_factor <= 90);
    }
}

TEST_CASE("time_stretch length contract", "[augment][stretch]") {
    const Signal x = random_clip(1, 10000);

    const Signal same = time_stretch(x, 1.0);
    CHECK(std::llabs(static_cast<long long>(same.size()) -
                     static_cast<long long>(x.size())) <= 1024);

    const Signal longer = time_stretch(x, 0.8);
    CHECK(std::llabs(static_cast<long long>(longer.size()) - 12500) <= 512);

    CHECK_THROWS_AS(time_stretch(x, 0.0), ArgumentError);
    CHECK_THROWS_AS(time_stretch(x, -1.0), ArgumentError);
}

TEST_CASE("time_stretch preserves pitch", "[augment][stretch]") {
    const Signal sine = oracle::sine(440.0, 0.8, 0.6, 22050);
    const Signal out = time_stretch(sine, 1.2);
    CHECK(dominant_frequency(out.samples, 22050) == Approx(440.0).margin(6.0));
}

TEST_CASE("pitch_shift scales the dominant frequency", "[augment][pitch]") {
    const Signal sine = oracle::sine(440.0, 0.8, 0.6, 22050);

    SECTION("zero semitones keeps frequency and length") {
        const Signal out = pitch_shift(sine, 0);
        CHECK(std::llabs(static_cast<long long>(out.size()) -
                         static_cast<long long>(sine.size())) <= 1024);
        CHECK(dominant_frequency(out.samples, 22050) == Approx(440.0).margin(6.0));
    }
    SECTION("+12 semitones doubles the frequency") {
        const Signal out = pitch_shift(sine, 12);
        CHECK(dominant_frequency(out.samples, 22050) == Approx(880.0).margin(6.0));
    }
    SECTION("-3 semitones scales by 2^(-1/4)") {
        const Signal out = pitch_shift(sine, -3);
        CHECK(dominant_frequency(out.samples, 22050) ==
              Approx(440.0 * std::pow(2.0, -3.0 / 12.0)).margin(6.0));
    }
    SECTION("out-of-range semitones rejected") {
        CHECK_THROWS_AS(pitch_shift(sine, 13), ArgumentError);
        CHECK_THROWS_AS(pitch_shift(sine, -13), ArgumentError);
    }
}

TEST_CASE("add_noise statistics and determinism", "[augment][noise]") {
    const Signal x = random_clip(2);

    SECTION("factor 0 is exact identity") {
        Rng rng(1);
        CHECK(add_noise(x, 0.0, rng).samples == x.samples);
    }
    SECTION("noise RMS tracks factor * peak") {
        Signal unit = x;
        const double peak = unit.peak();
        for (auto& v : unit.samples) v /= peak; // unit-peak clip
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            Rng rng(seed);
            const Signal y = add_noise(unit, 0.05, rng);
            std::vector<double> diff(y.size());
            for (std::size_t i = 0; i < y.size(); ++i)
                diff[i] = y.samples[i] - unit.samples[i];
            const double ratio = oracle::rms(diff) / 0.05;
            CHECK(ratio >= 0.9);
            CHECK(ratio <= 1.1);
        }
    }
    SECTION("same seed, same output") {
        Rng r1(9), r2(9);
        CHECK(add_noise(x, 0.03, r1).samples == add_noise(x, 0.03, r2).samples);
    }
}

TEST_CASE("shift_samples zero-fill rules", "[augment][shift]") {
    Signal x;
    x.sample_rate = 100;
    x.samples = {1.0, 2.0, 3.0};

    CHECK(shift_samples(x, 0).samples == x.samples);
    CHECK(shift_samples(x, 1).samples == std::vector<double>{0.0, 1.0, 2.0});
    CHECK(shift_samples(x, -1).samples == std::vector<double>{2.0, 3.0, 0.0});
    CHECK_THROWS_AS(shift_samples(x, 3), ArgumentError);
    CHECK_THROWS_AS(shift_samples(x, -3), ArgumentError);
}

TEST_CASE("shift_fraction delegates to shift_samples", "[augment][shift]") {
    const Signal x = random_clip(3, 1000);
    CHECK(shift_fraction(x, 0.0).samples == x.samples);
    CHECK(shift_fraction(x, 0.1).samples == shift_samples(x, 100).samples);
    CHECK(shift_fraction(x, -0.05).samples == shift_samples(x, -50).samples);
    CHECK_THROWS_AS(shift_fraction(x, 1.0), ArgumentError);
}

TEST_CASE("compress power-law warping", "[augment][compress]") {
    SECTION("c = 0 is exact identity") {
        const Signal x = random_clip(4);
        CHECK(compress(x, 0.0).samples == x.samples);
    }
    SECTION("single samples are fixed points") {
        Signal x;
        x.sample_rate = 100;
        x.samples = {0.25};
        CHECK(compress(x, 0.5).samples[0] == Approx(0.25));
    }
    SECTION("small amplitudes are raised, peak preserved") {
        Signal x;
        x.sample_rate = 100;
        x.samples = {1.0, 0.01};
        const Signal y = compress(x, 0.5);
        CHECK(y.samples[0] == Approx(1.0));
        CHECK(y.samples[1] == Approx(0.1));
    }
    SECTION("invalid factor") {
        const Signal x = random_clip(5);
        CHECK_THROWS_AS(compress(x, -0.1), ArgumentError);
        CHECK_THROWS_AS(compress(x, 1.0), ArgumentError);
    }
}

TEST_CASE("static_lowpass spectral behavior", "[augment][filter]") {
    SECTION("factor 90 barely touches a band-limited knock") {
        Rng rng(12);
        const Signal knock = synth_knock(Maturity::mature, rng);
        const Signal out = static_lowpass(knock, 90);
        const double in_rms = oracle::rms(knock.samples);
        const double out_rms = oracle::rms(out.samples);
        CHECK(std::abs(out_rms - in_rms) / in_rms < 0.05);
    }
    SECTION("factor 10 strips high-frequency energy by at least 20 dB") {
        const Signal noise = random_clip(13);
        const Signal out = static_lowpass(noise, 10);
        const double hf_before = band_energy(noise, 0.2 * 11025.0, 11025.0);
        const double hf_after = band_energy(out, 0.2 * 11025.0, 11025.0);
        CHECK(10.0 * std::log10(hf_before / hf_after) >= 20.0);
    }
    SECTION("deterministic and length preserving") {
        const Signal x = random_clip(14);
        const Signal a = static_lowpass(x, 42);
        const Signal b = static_lowpass(x, 42);
        CHECK(a.samples == b.samples);
        CHECK(a.size() == x.size());
    }
    SECTION("factor bounds enforced") {
        const Signal x = random_clip(15);
        CHECK_THROWS_AS(static_lowpass(x, 9), ArgumentError);
        CHECK_THROWS_AS(static_lowpass(x, 91), ArgumentError);
    }
}

TEST_CASE("hpss reconstruction and routing", "[augment][hpss]") {
    SECTION("harmonic + percussive reconstructs random knocks") {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            Rng rng(seed);
            const Signal knock = synth_knock(Maturity::overmature, rng);
            const auto [h, p] = hpss(knock);
            REQUIRE(h.size() == knock.size());
            REQUIRE(p.size() == knock.size());
            std::vector<double> sum(knock.size());
            for (std::size_t i = 0; i < sum.size(); ++i)
                sum[i] = h.samples[i] + p.samples[i];
            CHECK(oracle::rel_l2_error(knock.samples, sum) <= 0.05);
        }
    }
    SECTION("a sustained sine routes to the harmonic branch") {
        const Signal sine = oracle::sine(880.0, 0.7, 0.5, 22050);
        const auto [h, p] = hpss(sine);
        double he = 0.0, pe = 0.0;
        for (double v : h.samples) he += v * v;
        for (double v : p.samples) pe += v * v;
        CHECK(he / (he + pe) >= 0.8);
    }
    SECTION("too-short input is rejected") {
        Signal tiny;
        tiny.sample_rate = 22050;
        tiny.samples.assign(512, 0.1);
        CHECK_THROWS_AS(hpss(tiny), ArgumentError);
    }
}

TEST_CASE("vibrato delay modulation", "[augment][vibrato]") {
    SECTION("zero depth is the identity") {
        const Signal x = random_clip(16);
        CHECK(vibrato(x, 5.0, 0.0).samples == x.samples);
    }
    SECTION("length is preserved") {
        const Signal x = random_clip(17);
        CHECK(vibrato(x).size() == x.size());
    }
    SECTION("sidebands appear at the 5 Hz modulation rate") {
        const Signal sine = oracle::sine(440.0, 0.8, 2.0, 22050);
        const Signal out = vibrato(sine);
        const std::size_t n = next_pow2(out.size());
        std::vector<std::complex<double>> a(n, 0.0);
        for (std::size_t i = 0; i < out.size(); ++i) a[i] = out.samples[i];
        fft_inplace(a);
        auto mag_at = [&](double freq) {
            const std::size_t k =
                static_cast<std::size_t>(std::lround(freq * n / 22050.0));
            double best = 0.0; // search +-1 bin
            for (std::size_t j = k - 1; j <= k + 1; ++j) best = std::max(best, std::abs(a[j]));
            return best;
        };
        const double carrier = mag_at(440.0);
        CHECK(20.0 * std::log10(mag_at(435.0) / carrier) > -40.0);
        CHECK(20.0 * std::log10(mag_at(445.0) / carrier) > -40.0);
    }
}

TEST_CASE("time_varying_lowpass contracts", "[augment][tvlp]") {
    SECTION("near-open cutoff approximates the identity") {
        Rng rng(30);
        const Signal knock = synth_knock(Maturity::mature, rng);
        ProceduralConfig cfg;
        cfg.cutoff_lo = 0.99;
        cfg.cutoff_hi = 0.99;
        Rng stream(31);
        const Signal out = time_varying_lowpass(knock, cfg, stream);
        REQUIRE(out.size() == knock.size());
        CHECK(oracle::rel_l2_error(knock.samples, out.samples) <= 0.05);
    }
    SECTION("length preserved for random sizes >= 1024") {
        Rng rng(32);
        for (int trial = 0; trial < 5; ++trial) {
            const std::size_t len = 1024 + static_cast<std::size_t>(rng.uniform_int(0, 9000));
            const Signal x = random_clip(trial + 40, len);
            Rng stream(trial);
            CHECK(time_varying_lowpass(x, ProceduralConfig{}, stream).size() == len);
        }
    }
    SECTION("Hann overlap-add identity at 50% overlap") {
        // the windowing identity the recombination relies on: interleaved
        // Hann windows at hop N/2 sum to exactly one
        const auto win = hann_window(1024);
        for (std::size_t i = 0; i < 512; ++i)
            REQUIRE(win[i] + win[i + 512] == Approx(1.0).margin(1e-12));

        // overlap-add of raw (unfiltered) segments reconstructs the signal
        const Signal x = random_clip(50, 4096);
        std::vector<double> acc(x.size() + 2048, 0.0), norm(x.size() + 2048, 0.0);
        const std::size_t pad = 512;
        std::vector<double> padded(pad, 0.0);
        padded.insert(padded.end(), x.samples.begin(), x.samples.end());
        padded.resize(acc.size(), 0.0);
        for (std::size_t start = 0; start + 1024 <= padded.size(); start += 512)
            for (std::size_t i = 0; i < 1024; ++i) {
                acc[start + i] += padded[start + i] * win[i];
                norm[start + i] += win[i];
            }
        for (std::size_t i = 0; i < x.size(); ++i) {
            REQUIRE(norm[pad + i] == Approx(1.0).margin(1e-9));
            REQUIRE(acc[pad + i] == Approx(x.samples[i]).margin(1e-6));
        }
    }
    SECTION("too-short input rejected") {
        const Signal x = random_clip(51, 512);
        Rng stream(0);
        CHECK_THROWS_AS(time_varying_lowpass(x, ProceduralConfig{}, stream), ArgumentError);
    }
}

TEST_CASE("augment_clip determinism, label and validity", "[augment][clip]") {
    Rng src_rng(60);
    LabeledClip clip;
    clip.signal = synth_knock(Maturity::premature, src_rng);
    clip.label = Maturity::premature;
    clip.provenance = Provenance::synthetic;
    clip.source_id = "orig_0";

    SECTION("same seed twice gives identical output") {
        Rng r1(5), r2(5);
        const LabeledClip a = augment_clip(clip, r1);
        const LabeledClip b = augment_clip(clip, r2);
        CHECK(a.signal.samples == b.signal.samples);
        CHECK(a.signal.sample_rate == b.signal.sample_rate);
    }

    SECTION("label preserved, provenance augmented, signal valid over many draws") {
        for (std::uint64_t seed = 0; seed < 200; ++seed) {
            Rng rng(seed);
            const LabeledClip out = augment_clip(clip, rng);
            REQUIRE(out.label == clip.label);
            REQUIRE(out.provenance == Provenance::augmented);
            REQUIRE(out.source_id == "orig_0");
            REQUIRE(out.signal.sample_rate == clip.signal.sample_rate);
            REQUIRE_NOTHROW(out.signal.validate());
        }
    }
}
