#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "knock/error.hpp"
#include "knock/rng.hpp"

namespace knock {

/// Maturity classes, coded 0/1/2 throughout the pipeline.
enum class Maturity : int { premature = 0, mature = 1, overmature = 2 };

inline Maturity maturity_from_int(int v) {
    if (v < 0 || v > 2) throw ArgumentError("label out of range: " + std::to_string(v));
    return static_cast<Maturity>(v);
}

/**
 * Mono audio clip: amplitudes in [-1, 1] plus a sample rate.
 *
 * Invariants enforced by validate(): non-empty, positive rate, all samples
 * finite. Constructors of decoded/synthesized signals always validate.
 */
struct Signal {
    std::vector<double> samples;
    int sample_rate = 0;

    std::size_t size() const { return samples.size(); }
    double duration_s() const {
        return static_cast<double>(samples.size()) / sample_rate;
    }

    double peak() const {
        double p = 0.0;
        for (double s : samples) p = std::max(p, std::abs(s));
        return p;
    }

    void validate() const {
        if (samples.empty()) throw EmptySignalError("signal has no samples");
        if (sample_rate <= 0)
            throw ArgumentError("sample rate must be positive, got " +
                                std::to_string(sample_rate));
        for (double s : samples)
            if (!std::isfinite(s)) throw ArgumentError("signal contains non-finite sample");
    }
};

enum class Provenance { original, augmented, synthetic };

inline const char* to_string(Provenance p) {
    switch (p) {
        case Provenance::original:  return "original";
        case Provenance::augmented: return "augmented";
        case Provenance::synthetic: return "synthetic";
    }
    return "original";
}

inline Provenance provenance_from_string(const std::string& s) {
    if (s == "original")  return Provenance::original;
    if (s == "augmented") return Provenance::augmented;
    if (s == "synthetic") return Provenance::synthetic;
    throw FormatError("unknown provenance: " + s);
}

/// A clip with its class label and where it came from.
struct LabeledClip {
    Signal signal;
    Maturity label = Maturity::premature;
    Provenance provenance = Provenance::original;
    std::string source_id;
};

/**
 * Sum a list of equal-rate signals.
 *
 * Shorter signals are zero-padded at the tail to the longest length, then
 * added elementwise. If the raw sum peaks above 1 it is scaled back to
 * peak 1, otherwise left untouched.
 */
inline Signal combine_sum(const std::vector<Signal>& signals) {
    if (signals.empty()) throw ArgumentError("combine_sum: empty signal list");
    const int rate = signals.front().sample_rate;
    std::size_t max_len = 0;
    for (const auto& s : signals) {
        if (s.sample_rate != rate)
            throw ArgumentError("combine_sum: mixed sample rates");
        max_len = std::max(max_len, s.size());
    }
    Signal out;
    out.sample_rate = rate;
    out.samples.assign(max_len, 0.0);
    for (const auto& s : signals)
        for (std::size_t i = 0; i < s.size(); ++i) out.samples[i] += s.samples[i];
    const double p = out.peak();
    if (p > 1.0)
        for (double& v : out.samples) v /= p;
    out.validate();
    return out;
}

/// Concatenate equal-rate signals in list order.
inline Signal combine_extend(const std::vector<Signal>& signals) {
    if (signals.empty()) throw ArgumentError("combine_extend: empty signal list");
    const int rate = signals.front().sample_rate;
    Signal out;
    out.sample_rate = rate;
    for (const auto& s : signals) {
        if (s.sample_rate != rate)
            throw ArgumentError("combine_extend: mixed sample rates");
        out.samples.insert(out.samples.end(), s.samples.begin(), s.samples.end());
    }
    out.validate();
    return out;
}

namespace synth {

constexpr int kSampleRate = 22050;
constexpr double kDurationS = 0.25;
/// round(0.25 * 22050)
constexpr std::size_t kLength = 5513;

/// Dominant resonant band per class, Hz.
inline void class_band(Maturity label, double& lo, double& hi) {
    switch (label) {
        case Maturity::premature:  lo = 1600.0; hi = 2000.0; return;
        case Maturity::mature:     lo = 1000.0; hi = 1400.0; return;
        case Maturity::overmature: lo = 500.0;  hi = 900.0;  return;
    }
}

} // namespace synth

/**
 * Synthetic knock: a stand-in for tapped-fruit recordings.
 *
 * 0.25 s at 22,050 Hz. Three exponentially damped sinusoids starting at a
 * shared random onset: the dominant partial sits inside the class band
 * (premature 1600-2000 Hz, mature 1000-1400 Hz, overmature 500-900 Hz),
 * two weaker partials land anywhere in 400-3600 Hz, so neighboring classes
 * bleed into each other's bands. Decay constants 15-40 1/s. Gaussian noise
 * at -30 dB relative to the tone peak, then peak-normalized to 1.
 *
 * The random onset (up to 0.11 s) moves the knock transient across analysis
 * frames from clip to clip.
 */
inline Signal synth_knock(Maturity label, Rng& rng) {
    using namespace synth;
    double band_lo = 0.0, band_hi = 0.0;
    class_band(label, band_lo, band_hi);

    const double onset = rng.uniform(0.0, 0.11);
    const double f0 = rng.uniform(band_lo + 10.0, band_hi - 10.0);
    const double d0 = rng.uniform(15.0, 40.0);
    const double phase0 = rng.uniform(0.0, 2.0 * M_PI);

    struct Partial { double freq, decay, amp, phase; };
    Partial partials[3];
    partials[0] = {f0, d0, 1.0, phase0};
    for (int i = 1; i < 3; ++i) {
        const double fi = rng.uniform(400.0, 3600.0);
        const double di = rng.uniform(15.0, 40.0);
        // keep the spectral peak of side partials strictly below the dominant
        const double energy_ratio = rng.uniform(0.05, 0.30);
        const double ai = std::sqrt(energy_ratio * di / d0);
        partials[i] = {fi, di, ai, rng.uniform(0.0, 2.0 * M_PI)};
    }

    Signal out;
    out.sample_rate = kSampleRate;
    out.samples.assign(kLength, 0.0);
    for (std::size_t n = 0; n < kLength; ++n) {
        const double t = static_cast<double>(n) / kSampleRate;
        if (t < onset) continue;
        const double tt = t - onset;
        double v = 0.0;
        for (const auto& p : partials)
            v += p.amp * std::exp(-p.decay * tt) *
                 std::sin(2.0 * M_PI * p.freq * tt + p.phase);
        out.samples[n] = v;
    }

    const double tone_peak = out.peak();
    const double noise_sigma = std::pow(10.0, -30.0 / 20.0) * tone_peak;
    for (double& v : out.samples) v += noise_sigma * rng.normal();

    const double p = out.peak();
    for (double& v : out.samples) v /= p;
    out.validate();
    return out;
}

} // namespace knock
