#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include "knock/butterworth.hpp"
#include "knock/error.hpp"
#include "knock/fft.hpp"
#include "knock/rng.hpp"
#include "knock/signal.hpp"

namespace knock {

/**
 * Parameter draw ranges for the audiomentation transforms. Every field is
 * constrained to the closed interval noted next to it; draw() samples each
 * uniformly from its range.
 */
struct AugmentParams {
    double stretch_factor = 1.0;     // [0.8, 1.2]
    int shift_samples = 0;           // [-1000, 1000]
    int pitch_semitones = 0;         // [-3, 3]
    double compression_factor = 0.3; // [0.1, 0.5]
    double noise_factor = 0.0;       // [0, 0.05]
    double shift_fraction = 0.0;     // [-0.1, 0.1]
    int filter_factor = 50;          // [10, 90] percent of Nyquist

    void validate() const {
        if (stretch_factor < 0.8 || stretch_factor > 1.2)
            throw ArgumentError("stretch_factor out of [0.8, 1.2]");
        if (shift_samples < -1000 || shift_samples > 1000)
            throw ArgumentError("shift_samples out of [-1000, 1000]");
        if (pitch_semitones < -3 || pitch_semitones > 3)
            throw ArgumentError("pitch_semitones out of [-3, 3]");
        if (compression_factor < 0.1 || compression_factor > 0.5)
            throw ArgumentError("compression_factor out of [0.1, 0.5]");
        if (noise_factor < 0.0 || noise_factor > 0.05)
            throw ArgumentError("noise_factor out of [0, 0.05]");
        if (shift_fraction < -0.1 || shift_fraction > 0.1)
            throw ArgumentError("shift_fraction out of [-0.1, 0.1]");
        if (filter_factor < 10 || filter_factor > 90)
            throw ArgumentError("filter_factor out of [10, 90]");
    }

    static AugmentParams draw(Rng& rng) {
        AugmentParams p;
        p.stretch_factor = rng.uniform(0.8, 1.2);
        p.shift_samples = static_cast<int>(rng.uniform_int(-1000, 1000));
        p.pitch_semitones = static_cast<int>(rng.uniform_int(-3, 3));
        p.compression_factor = rng.uniform(0.1, 0.5);
        p.noise_factor = rng.uniform(0.0, 0.05);
        p.shift_fraction = rng.uniform(-0.1, 0.1);
        p.filter_factor = static_cast<int>(rng.uniform_int(10, 90));
        p.validate();
        return p;
    }
};

/// Settings for the procedural time-varying low-pass generator.
struct ProceduralConfig {
    int filter_order = 6;
    std::size_t window_size = 1024;
    double overlap = 0.5;
    double cutoff_lo = 0.10; // fraction of Nyquist
    double cutoff_hi = 0.90;

    void validate() const {
        if (filter_order < 1) throw ArgumentError("filter_order must be >= 1");
        if (window_size < 2) throw ArgumentError("window_size must be >= 2");
        if (overlap <= 0.0 || overlap >= 1.0)
            throw ArgumentError("overlap must lie in (0, 1)");
        if (cutoff_lo <= 0.0 || cutoff_hi >= 1.0 || cutoff_lo > cutoff_hi)
            throw ArgumentError("cutoff range must satisfy 0 < lo <= hi < 1");
    }
};

namespace detail {

inline double princ_arg(double phase) {
    return phase - 2.0 * M_PI * std::round(phase / (2.0 * M_PI));
}

/// Linear-interpolation resample: out[i] = x[i * step], len = round(len/step).
inline std::vector<double> resample_read_speed(const std::vector<double>& x,
                                               double step) {
    const std::size_t n_out =
        static_cast<std::size_t>(std::llround(static_cast<double>(x.size()) / step));
    std::vector<double> out(n_out);
    for (std::size_t i = 0; i < n_out; ++i) {
        const double pos = static_cast<double>(i) * step;
        const std::size_t i0 = static_cast<std::size_t>(pos);
        if (i0 + 1 >= x.size()) {
            out[i] = x.back();
            continue;
        }
        const double frac = pos - static_cast<double>(i0);
        out[i] = x[i0] * (1.0 - frac) + x[i0 + 1] * frac;
    }
    return out;
}

} // namespace detail

/**
 * Phase-vocoder time stretch. Output length is round(len/factor) up to one
 * STFT frame; frequencies are preserved. factor > 1 shortens the clip.
 */
inline Signal time_stretch(const Signal& x, double factor) {
    if (!(factor > 0.0)) throw ArgumentError("time_stretch: factor must be > 0");

    constexpr std::size_t kFft = 1024;
    constexpr std::size_t kSynHop = 256;
    const std::size_t n = x.size();
    const std::size_t out_len =
        static_cast<std::size_t>(std::llround(static_cast<double>(n) / factor));

    // padded source so every analysis frame is complete
    std::vector<double> src = x.samples;
    src.resize(std::max<std::size_t>(n, kFft) + kFft, 0.0);

    const auto win = hann_window(kFft);
    const std::size_t n_frames = out_len / kSynHop + 2;
    const std::size_t bins = kFft / 2 + 1;

    std::vector<double> acc(out_len + 2 * kFft, 0.0);
    std::vector<double> norm(out_len + 2 * kFft, 0.0);
    std::vector<double> syn_phase(bins, 0.0), prev_phase(bins, 0.0);
    std::vector<std::complex<double>> buf(kFft);

    long prev_pos = 0;
    for (std::size_t f = 0; f < n_frames; ++f) {
        const long pos = std::lround(static_cast<double>(f) * kSynHop * factor);
        if (static_cast<std::size_t>(pos) + kFft > src.size()) break;

        for (std::size_t i = 0; i < kFft; ++i) buf[i] = src[pos + i] * win[i];
        fft_inplace(buf);

        if (f == 0) {
            for (std::size_t k = 0; k < bins; ++k) {
                syn_phase[k] = std::arg(buf[k]);
                prev_phase[k] = syn_phase[k];
            }
        } else {
            const double delta = static_cast<double>(pos - prev_pos);
            for (std::size_t k = 0; k < bins; ++k) {
                const double omega = 2.0 * M_PI * static_cast<double>(k) / kFft;
                const double ph = std::arg(buf[k]);
                const double dev = detail::princ_arg(ph - prev_phase[k] - omega * delta);
                const double inst = omega + (delta > 0.0 ? dev / delta : 0.0);
                syn_phase[k] += inst * kSynHop;
                prev_phase[k] = ph;
            }
        }
        prev_pos = pos;

        for (std::size_t k = 0; k < bins; ++k) {
            const double mag = std::abs(buf[k]);
            buf[k] = std::polar(mag, syn_phase[k]);
        }
        for (std::size_t k = bins; k < kFft; ++k) buf[k] = std::conj(buf[kFft - k]);
        fft_inplace(buf, true);

        const std::size_t start = f * kSynHop;
        for (std::size_t i = 0; i < kFft; ++i) {
            acc[start + i] += buf[i].real() * win[i];
            norm[start + i] += win[i] * win[i];
        }
    }

    Signal out;
    out.sample_rate = x.sample_rate;
    out.samples.resize(out_len);
    for (std::size_t i = 0; i < out_len; ++i)
        out.samples[i] = norm[i] > 1e-12 ? acc[i] / norm[i] : 0.0;
    return out;
}

/**
 * Pitch shift by whole semitones: phase-vocoder stretch to len * 2^(s/12)
 * followed by linear resampling back to the original length, which scales
 * every frequency by 2^(s/12).
 */
inline Signal pitch_shift(const Signal& x, int semitones) {
    if (semitones < -12 || semitones > 12)
        throw ArgumentError("pitch_shift: semitones out of [-12, 12]");
    const double k = std::pow(2.0, semitones / 12.0);
    const Signal stretched = time_stretch(x, 1.0 / k);
    Signal out;
    out.sample_rate = x.sample_rate;
    out.samples = detail::resample_read_speed(stretched.samples, k);
    return out;
}

/// y = x + factor * peak(x) * g with g unit-variance Gaussian, per sample.
inline Signal add_noise(const Signal& x, double factor, Rng& rng) {
    if (factor < 0.0) throw ArgumentError("add_noise: factor must be >= 0");
    Signal out = x;
    if (factor == 0.0) return out;
    const double scale = factor * x.peak();
    for (double& v : out.samples) v += scale * rng.normal();
    return out;
}

/**
 * Non-circular shift with zero fill. Positive n delays the signal
 * (prepends zeros and truncates the tail); length is unchanged.
 */
inline Signal shift_samples(const Signal& x, long n) {
    if (static_cast<std::size_t>(std::labs(n)) >= x.size())
        throw ArgumentError("shift_samples: |n| must be < signal length");
    Signal out;
    out.sample_rate = x.sample_rate;
    out.samples.assign(x.size(), 0.0);
    if (n >= 0)
        std::copy(x.samples.begin(), x.samples.end() - n, out.samples.begin() + n);
    else
        std::copy(x.samples.begin() - n, x.samples.end(), out.samples.begin());
    return out;
}

/// shift_samples by round(f * len).
inline Signal shift_fraction(const Signal& x, double f) {
    if (std::abs(f) >= 1.0) throw ArgumentError("shift_fraction: |f| must be < 1");
    return shift_samples(x, std::lround(f * static_cast<double>(x.size())));
}

/**
 * Power-law dynamic-range compression: y = sign(x)|x|^(1-c), rescaled so
 * the output peak matches the input peak.
 */
inline Signal compress(const Signal& x, double c) {
    if (c < 0.0 || c >= 1.0) throw ArgumentError("compress: c must lie in [0, 1)");
    Signal out;
    out.sample_rate = x.sample_rate;
    out.samples.resize(x.size());
    if (c == 0.0) {
        out.samples = x.samples;
        return out;
    }
    const double in_peak = x.peak();
    double out_peak = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = x.samples[i];
        const double y = (v >= 0.0 ? 1.0 : -1.0) * std::pow(std::abs(v), 1.0 - c);
        out.samples[i] = y;
        out_peak = std::max(out_peak, std::abs(y));
    }
    if (out_peak > 0.0) {
        const double g = in_peak / out_peak;
        for (double& v : out.samples) v *= g;
    }
    return out;
}

/// Order-5 Butterworth low-pass at (filter_factor/100) * Nyquist.
inline Signal static_lowpass(const Signal& x, int filter_factor) {
    if (filter_factor < 10 || filter_factor > 90)
        throw ArgumentError("static_lowpass: filter_factor out of [10, 90]");
    const double cutoff = filter_factor / 100.0 * (0.5 * x.sample_rate);
    return butter_lowpass_filter(x, butter_lowpass(cutoff, x.sample_rate, 5));
}

/**
 * Harmonic/percussive separation by median filtering the STFT magnitude:
 * along time for the harmonic estimate, along frequency for the percussive
 * one (kernel 17 each), soft Wiener-style masks, inverse STFT. Both outputs
 * have the input's length, and the two masks sum to one wherever the
 * filtered energies are nonzero, so harmonic + percussive reconstructs the
 * input up to STFT edge effects.
 */
inline std::pair<Signal, Signal> hpss(const Signal& x) {
    constexpr std::size_t kFft = 1024;
    constexpr std::size_t kHop = 256;
    constexpr int kKernel = 17;
    if (x.size() < kFft)
        throw ArgumentError("hpss: input shorter than the 1024-sample STFT window");

    Stft s = stft_forward(x.samples, kFft, kHop);
    const std::size_t n_frames = s.frames.size();
    const std::size_t bins = kFft / 2 + 1;

    std::vector<std::vector<double>> mag(n_frames, std::vector<double>(bins));
    for (std::size_t f = 0; f < n_frames; ++f)
        for (std::size_t k = 0; k < bins; ++k) mag[f][k] = std::abs(s.frames[f][k]);

    const auto median_of = [](std::vector<double>& v) {
        const std::size_t mid = v.size() / 2;
        std::nth_element(v.begin(), v.begin() + mid, v.end());
        return v[mid];
    };

    // reflect-padded 1-D median along a sequence
    const auto medfilt = [&](const std::vector<double>& seq, int kernel) {
        const int n = static_cast<int>(seq.size());
        const int k = std::min(kernel, n % 2 == 0 ? n - 1 : n) | 1;
        const int half = k / 2;
        std::vector<double> out(n);
        std::vector<double> window(k);
        for (int i = 0; i < n; ++i) {
            for (int j = -half; j <= half; ++j) {
                int idx = i + j;
                if (idx < 0) idx = -idx;                   // reflect
                if (idx >= n) idx = 2 * n - 2 - idx;
                window[j + half] = seq[std::clamp(idx, 0, n - 1)];
            }
            std::vector<double> tmp = window;
            out[i] = median_of(tmp);
        }
        return out;
    };

    std::vector<std::vector<double>> harm(n_frames, std::vector<double>(bins));
    std::vector<std::vector<double>> perc(n_frames, std::vector<double>(bins));
    std::vector<double> tmp(n_frames);
    for (std::size_t k = 0; k < bins; ++k) {
        for (std::size_t f = 0; f < n_frames; ++f) tmp[f] = mag[f][k];
        const auto med = medfilt(tmp, kKernel);
        for (std::size_t f = 0; f < n_frames; ++f) harm[f][k] = med[f];
    }
    for (std::size_t f = 0; f < n_frames; ++f) perc[f] = medfilt(mag[f], kKernel);

    Stft hs = s, ps = s;
    for (std::size_t f = 0; f < n_frames; ++f) {
        for (std::size_t k = 0; k < bins; ++k) {
            const double h2 = harm[f][k] * harm[f][k];
            const double p2 = perc[f][k] * perc[f][k];
            const double den = h2 + p2;
            const double mh = den > 0.0 ? h2 / den : 0.5;
            hs.frames[f][k] = s.frames[f][k] * mh;
            ps.frames[f][k] = s.frames[f][k] * (1.0 - mh);
        }
    }

    Signal harmonic, percussive;
    harmonic.sample_rate = x.sample_rate;
    percussive.sample_rate = x.sample_rate;
    harmonic.samples = stft_inverse(hs);
    percussive.samples = stft_inverse(ps);
    return {std::move(harmonic), std::move(percussive)};
}

/**
 * Modulated delay line: delay(t) = depth * (1 + sin(2 pi rate t)) / 2,
 * linear interpolation between samples. Defaults: 5 Hz rate, 2 ms depth.
 */
inline Signal vibrato(const Signal& x, double rate_hz = 5.0, double depth_s = 0.002) {
    const double depth_samples = depth_s * x.sample_rate;
    if (static_cast<double>(x.size()) <= depth_samples)
        throw ArgumentError("vibrato: input shorter than the delay depth");
    Signal out;
    out.sample_rate = x.sample_rate;
    out.samples.resize(x.size());
    for (std::size_t n = 0; n < x.size(); ++n) {
        const double t = static_cast<double>(n) / x.sample_rate;
        const double delay = depth_samples * (1.0 + std::sin(2.0 * M_PI * rate_hz * t)) / 2.0;
        const double pos = static_cast<double>(n) - delay;
        if (pos < 0.0) {
            out.samples[n] = 0.0;
            continue;
        }
        const std::size_t i0 = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(i0);
        const double a = x.samples[i0];
        const double b = i0 + 1 < x.size() ? x.samples[i0 + 1] : x.samples[i0];
        out.samples[n] = a * (1.0 - frac) + b * frac;
    }
    return out;
}

/**
 * Procedural generation: each window_size segment is run through an
 * order-6 Butterworth low-pass with a cutoff drawn uniformly from
 * [cutoff_lo, cutoff_hi] * Nyquist, then Hann-windowed and overlap-added.
 * Segments are filtered forward-backward (zero phase) so overlapping
 * regions with different cutoffs stay aligned instead of combing. The
 * window sum is normalized away, so with a wide-open cutoff the output
 * reproduces the input. Output length equals input length.
 */
inline Signal time_varying_lowpass(const Signal& x, const ProceduralConfig& cfg, Rng& rng) {
    cfg.validate();
    if (x.size() < cfg.window_size)
        throw ArgumentError("time_varying_lowpass: input shorter than one window");

    const std::size_t win_n = cfg.window_size;
    const std::size_t hop =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(win_n * (1.0 - cfg.overlap))));
    const std::size_t front_pad = win_n / 2;
    const double nyq = 0.5 * x.sample_rate;

    std::vector<double> padded(front_pad, 0.0);
    padded.insert(padded.end(), x.samples.begin(), x.samples.end());
    const std::size_t covered = front_pad + x.size(); // samples that need full coverage
    std::size_t n_seg = 1;
    while ((n_seg - 1) * hop + win_n < covered + front_pad) ++n_seg;
    padded.resize((n_seg - 1) * hop + win_n, 0.0);

    const auto win = hann_window(win_n);
    std::vector<double> acc(padded.size(), 0.0), norm(padded.size(), 0.0);
    Signal seg;
    seg.sample_rate = x.sample_rate;
    for (std::size_t sidx = 0; sidx < n_seg; ++sidx) {
        const std::size_t start = sidx * hop;
        seg.samples.assign(padded.begin() + start, padded.begin() + start + win_n);
        const double cutoff = rng.uniform(cfg.cutoff_lo, cfg.cutoff_hi) * nyq;
        const auto filt = butter_lowpass(cutoff, x.sample_rate, cfg.filter_order);
        Signal filtered = butter_lowpass_filter(seg, filt);
        std::reverse(filtered.samples.begin(), filtered.samples.end());
        filtered = butter_lowpass_filter(filtered, filt);
        std::reverse(filtered.samples.begin(), filtered.samples.end());
        for (std::size_t i = 0; i < win_n; ++i) {
            acc[start + i] += filtered.samples[i] * win[i];
            norm[start + i] += win[i];
        }
    }

    Signal out;
    out.sample_rate = x.sample_rate;
    out.samples.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const std::size_t j = front_pad + i;
        out.samples[i] = norm[j] > 1e-9 ? acc[j] / norm[j] : 0.0;
    }
    return out;
}

/// The nine audiomentation transforms in their canonical application order.
enum class Transform : int {
    stretch = 0,
    pitch = 1,
    compression = 2,
    noise = 3,
    shift_samples = 4,
    shift_fraction = 5,
    static_filter = 6,
    hpss_branch = 7,
    vibrato = 8,
};

constexpr int kNumTransforms = 9;

/**
 * Audiomentation: draw AugmentParams, pick a random subset of 1 to 4 of the
 * nine transforms, and apply them in canonical order (stretch, pitch,
 * compression, noise, shifts, filter, hpss branch, vibrato). The label is
 * preserved and provenance becomes `augmented`. Deterministic in
 * (clip, rng state).
 */
inline LabeledClip augment_clip(const LabeledClip& clip, Rng& rng) {
    clip.signal.validate();
    const AugmentParams params = AugmentParams::draw(rng);

    // uniform random subset of size 1..4 via a partial Fisher-Yates shuffle
    std::array<int, kNumTransforms> order;
    std::iota(order.begin(), order.end(), 0);
    for (int i = 0; i < kNumTransforms - 1; ++i) {
        const int j = i + static_cast<int>(rng.uniform_int(0, kNumTransforms - 1 - i));
        std::swap(order[i], order[j]);
    }
    const int subset_size = static_cast<int>(rng.uniform_int(1, 4));
    const bool keep_harmonic = rng.uniform01() < 0.5;

    std::array<bool, kNumTransforms> active{};
    for (int i = 0; i < subset_size; ++i) active[order[i]] = true;

    Signal y = clip.signal;
    if (active[static_cast<int>(Transform::stretch)])
        y = time_stretch(y, params.stretch_factor);
    if (active[static_cast<int>(Transform::pitch)])
        y = pitch_shift(y, params.pitch_semitones);
    if (active[static_cast<int>(Transform::compression)])
        y = compress(y, params.compression_factor);
    if (active[static_cast<int>(Transform::noise)])
        y = add_noise(y, params.noise_factor, rng);
    if (active[static_cast<int>(Transform::shift_samples)])
        y = shift_samples(y, params.shift_samples);
    if (active[static_cast<int>(Transform::shift_fraction)])
        y = shift_fraction(y, params.shift_fraction);
    if (active[static_cast<int>(Transform::static_filter)])
        y = static_lowpass(y, params.filter_factor);
    if (active[static_cast<int>(Transform::hpss_branch)]) {
        auto [h, p] = hpss(y);
        y = keep_harmonic ? std::move(h) : std::move(p);
    }
    if (active[static_cast<int>(Transform::vibrato)]) y = vibrato(y);

    LabeledClip out;
    out.signal = std::move(y);
    out.label = clip.label;
    out.provenance = Provenance::augmented;
    out.source_id = clip.source_id;
    out.signal.validate();
    return out;
}

/// Procedural generation of one variant via the time-varying low-pass.
inline LabeledClip procedural_clip(const LabeledClip& clip, Rng& rng) {
    LabeledClip out;
    out.signal = time_varying_lowpass(clip.signal, ProceduralConfig{}, rng);
    out.label = clip.label;
    out.provenance = Provenance::augmented;
    out.source_id = clip.source_id;
    out.signal.validate();
    return out;
}

} // namespace knock
