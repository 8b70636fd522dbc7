#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "knock/error.hpp"
#include "knock/fft.hpp"
#include "knock/signal.hpp"

namespace knock {

/// Analysis framing: Hann-windowed frames of frame_len every hop samples.
struct StftConfig {
    std::size_t frame_len = 1024;
    std::size_t hop = 512;

    void validate() const {
        if (hop == 0 || hop > frame_len)
            throw ArgumentError("stft config requires 0 < hop <= frame_len");
        if ((frame_len & (frame_len - 1)) != 0)
            throw ArgumentError("frame_len must be a power of two");
    }
};

/**
 * MFCC extraction parameters. The defaults (128 mel filters, all 128 DCT
 * coefficients kept, 64 frames) produce the 128 x 64 tensor the classifier
 * consumes.
 */
struct MfccConfig {
    StftConfig stft;
    std::size_t n_mels = 128;
    std::size_t n_coeffs = 128;
    double fmin = 0.0;
    double fmax = 0.0; // 0 means Nyquist
    double log_floor = 1e-10;
    std::size_t frames = 64; // output frame count (truncate or zero-pad)

    void validate(int sample_rate) const {
        stft.validate();
        if (n_coeffs > n_mels) throw ArgumentError("n_coeffs must be <= n_mels");
        const double nyq = 0.5 * sample_rate;
        const double hi = fmax > 0.0 ? fmax : nyq;
        if (!(fmin < hi && hi <= nyq))
            throw ArgumentError("mel range must satisfy fmin < fmax <= Nyquist");
        if (frames == 0) throw ArgumentError("frames must be positive");
    }
};

/// Fixed-shape standardized MFCC matrix: n_coeffs rows x frames columns.
struct FeatureTensor {
    std::size_t rows = 0; // coefficient axis
    std::size_t cols = 0; // frame axis
    std::vector<double> data; // row-major

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

inline double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
inline double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

/**
 * Hann-windowed frames. Inputs shorter than one frame are zero-padded to a
 * single frame; otherwise frame count = 1 + floor((len - frame_len)/hop).
 */
inline std::vector<std::vector<double>> frame_signal(const Signal& x,
                                                     const StftConfig& cfg) {
    cfg.validate();
    const auto win = hann_window(cfg.frame_len);
    const std::size_t n = x.size();
    const std::size_t n_frames =
        n >= cfg.frame_len ? 1 + (n - cfg.frame_len) / cfg.hop : 1;
    std::vector<std::vector<double>> frames(n_frames,
                                            std::vector<double>(cfg.frame_len, 0.0));
    for (std::size_t f = 0; f < n_frames; ++f) {
        const std::size_t start = f * cfg.hop;
        for (std::size_t i = 0; i < cfg.frame_len && start + i < n; ++i)
            frames[f][i] = x.samples[start + i] * win[i];
    }
    return frames;
}

/// Per-frame |FFT|^2 over bins 0..frame_len/2 (frames x bins).
inline std::vector<std::vector<double>> power_spectrogram(const Signal& x,
                                                          const StftConfig& cfg) {
    const auto frames = frame_signal(x, cfg);
    const std::size_t bins = cfg.frame_len / 2 + 1;
    std::vector<std::vector<double>> out(frames.size(), std::vector<double>(bins));
    for (std::size_t f = 0; f < frames.size(); ++f) {
        const auto spec = fft_real(frames[f]);
        for (std::size_t k = 0; k < bins; ++k) out[f][k] = std::norm(spec[k]);
    }
    return out;
}

/**
 * Triangular mel filterbank (n_mels x bins). Centers are spaced evenly on
 * the mel scale between fmin and fmax; each filter rises linearly to its
 * center and falls to the next one, peak 1.
 */
inline std::vector<std::vector<double>> mel_filterbank(const MfccConfig& cfg,
                                                       int sample_rate) {
    cfg.validate(sample_rate);
    const std::size_t bins = cfg.stft.frame_len / 2 + 1;
    const double fmax = cfg.fmax > 0.0 ? cfg.fmax : 0.5 * sample_rate;

    std::vector<double> centers(cfg.n_mels + 2);
    const double mel_lo = hz_to_mel(cfg.fmin);
    const double mel_hi = hz_to_mel(fmax);
    for (std::size_t i = 0; i < centers.size(); ++i)
        centers[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                            static_cast<double>(cfg.n_mels + 1));

    std::vector<std::vector<double>> fb(cfg.n_mels, std::vector<double>(bins, 0.0));
    for (std::size_t m = 0; m < cfg.n_mels; ++m) {
        const double lo = centers[m], c = centers[m + 1], hi = centers[m + 2];
        for (std::size_t k = 0; k < bins; ++k) {
            const double f = static_cast<double>(k) * sample_rate / cfg.stft.frame_len;
            const double rising = (f - lo) / (c - lo);
            const double falling = (hi - f) / (hi - c);
            fb[m][k] = std::max(0.0, std::min(rising, falling));
        }
    }
    return fb;
}

/// Center frequencies (Hz) of the filterbank produced by mel_filterbank.
inline std::vector<double> mel_center_frequencies(const MfccConfig& cfg,
                                                  int sample_rate) {
    const double fmax = cfg.fmax > 0.0 ? cfg.fmax : 0.5 * sample_rate;
    const double mel_lo = hz_to_mel(cfg.fmin);
    const double mel_hi = hz_to_mel(fmax);
    std::vector<double> centers(cfg.n_mels);
    for (std::size_t i = 0; i < cfg.n_mels; ++i)
        centers[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) *
                                            static_cast<double>(i + 1) /
                                            static_cast<double>(cfg.n_mels + 1));
    return centers;
}

/// Log mel filterbank energies: log(filterbank . power + log_floor), frames x n_mels.
inline std::vector<std::vector<double>> mfe(const Signal& x, const MfccConfig& cfg) {
    cfg.validate(x.sample_rate);
    const auto power = power_spectrogram(x, cfg.stft);
    const auto fb = mel_filterbank(cfg, x.sample_rate);
    std::vector<std::vector<double>> out(power.size(),
                                         std::vector<double>(cfg.n_mels));
    for (std::size_t f = 0; f < power.size(); ++f)
        for (std::size_t m = 0; m < cfg.n_mels; ++m) {
            double acc = 0.0;
            for (std::size_t k = 0; k < power[f].size(); ++k)
                acc += fb[m][k] * power[f][k];
            out[f][m] = std::log(acc + cfg.log_floor);
        }
    return out;
}

/// Orthonormal DCT-II matrix (n_coeffs x n_mels).
inline std::vector<std::vector<double>> dct_matrix(std::size_t n_coeffs,
                                                   std::size_t n_mels) {
    std::vector<std::vector<double>> d(n_coeffs, std::vector<double>(n_mels));
    for (std::size_t k = 0; k < n_coeffs; ++k) {
        const double scale =
            std::sqrt((k == 0 ? 1.0 : 2.0) / static_cast<double>(n_mels));
        for (std::size_t m = 0; m < n_mels; ++m)
            d[k][m] = scale * std::cos(M_PI * static_cast<double>(k) *
                                       (2.0 * static_cast<double>(m) + 1.0) /
                                       (2.0 * static_cast<double>(n_mels)));
    }
    return d;
}

/// MFCC: orthonormal DCT-II along the mel axis of mfe, first n_coeffs kept.
inline std::vector<std::vector<double>> mfcc(const Signal& x, const MfccConfig& cfg) {
    const auto energies = mfe(x, cfg);
    const auto dct = dct_matrix(cfg.n_coeffs, cfg.n_mels);
    std::vector<std::vector<double>> out(energies.size(),
                                         std::vector<double>(cfg.n_coeffs));
    for (std::size_t f = 0; f < energies.size(); ++f)
        for (std::size_t k = 0; k < cfg.n_coeffs; ++k) {
            double acc = 0.0;
            for (std::size_t m = 0; m < cfg.n_mels; ++m)
                acc += dct[k][m] * energies[f][m];
            out[f][k] = acc;
        }
    return out;
}

/**
 * Network input: MFCC transposed to coefficients x frames, frame axis
 * truncated or right-zero-padded to cfg.frames, then standardized over the
 * whole tensor (subtract mean, divide by std + 1e-8).
 */
inline FeatureTensor featurize(const Signal& x, const MfccConfig& cfg) {
    const auto coeffs = mfcc(x, cfg);
    FeatureTensor t;
    t.rows = cfg.n_coeffs;
    t.cols = cfg.frames;
    t.data.assign(t.rows * t.cols, 0.0);
    const std::size_t real_frames = std::min(coeffs.size(), cfg.frames);
    for (std::size_t f = 0; f < real_frames; ++f)
        for (std::size_t k = 0; k < cfg.n_coeffs; ++k) t.at(k, f) = coeffs[f][k];

    double mean = 0.0;
    for (double v : t.data) mean += v;
    mean /= static_cast<double>(t.data.size());
    double var = 0.0;
    for (double v : t.data) var += (v - mean) * (v - mean);
    var /= static_cast<double>(t.data.size());
    const double denom = std::sqrt(var) + 1e-8;
    for (double& v : t.data) v = (v - mean) / denom;
    return t;
}

/// Raw waveform truncated or zero-padded to a fixed length.
inline std::vector<double> time_series_feature(const Signal& x, std::size_t len) {
    if (len == 0) throw ArgumentError("time_series_feature: len must be positive");
    std::vector<double> out(len, 0.0);
    const std::size_t n = std::min(len, x.size());
    std::copy(x.samples.begin(), x.samples.begin() + n, out.begin());
    return out;
}

// ---------------------------------------------------------------------------
// Feature record file: magic "KNF1"; per record: label (1 byte), rows and
// cols (uint32 little-endian), row-major float32 data.
// ---------------------------------------------------------------------------

struct FeatureRecord {
    int label = 0;
    FeatureTensor tensor;
};

inline void write_feature_file(const std::string& path,
                               const std::vector<FeatureRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open feature file for writing: " + path);
    out.write("KNF1", 4);
    for (const auto& rec : records) {
        const unsigned char label = static_cast<unsigned char>(rec.label);
        out.write(reinterpret_cast<const char*>(&label), 1);
        const std::uint32_t rows = static_cast<std::uint32_t>(rec.tensor.rows);
        const std::uint32_t cols = static_cast<std::uint32_t>(rec.tensor.cols);
        unsigned char dims[8] = {
            static_cast<unsigned char>(rows & 0xff),
            static_cast<unsigned char>((rows >> 8) & 0xff),
            static_cast<unsigned char>((rows >> 16) & 0xff),
            static_cast<unsigned char>((rows >> 24) & 0xff),
            static_cast<unsigned char>(cols & 0xff),
            static_cast<unsigned char>((cols >> 8) & 0xff),
            static_cast<unsigned char>((cols >> 16) & 0xff),
            static_cast<unsigned char>((cols >> 24) & 0xff)};
        out.write(reinterpret_cast<const char*>(dims), 8);
        for (double v : rec.tensor.data) {
            const float fv = static_cast<float>(v);
            out.write(reinterpret_cast<const char*>(&fv), 4);
        }
    }
    if (!out) throw IoError("feature file write failed: " + path);
}

inline std::vector<FeatureRecord> read_feature_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open feature file: " + path);
    char magic[4];
    if (!in.read(magic, 4) || std::string(magic, 4) != "KNF1")
        throw FormatError("bad feature file magic in " + path);
    std::vector<FeatureRecord> records;
    for (;;) {
        unsigned char label;
        if (!in.read(reinterpret_cast<char*>(&label), 1)) break;
        unsigned char dims[8];
        if (!in.read(reinterpret_cast<char*>(dims), 8))
            throw FormatError("truncated feature record in " + path);
        const std::uint32_t rows = dims[0] | (dims[1] << 8) | (dims[2] << 16) |
                                   (static_cast<std::uint32_t>(dims[3]) << 24);
        const std::uint32_t cols = dims[4] | (dims[5] << 8) | (dims[6] << 16) |
                                   (static_cast<std::uint32_t>(dims[7]) << 24);
        FeatureRecord rec;
        rec.label = label;
        rec.tensor.rows = rows;
        rec.tensor.cols = cols;
        rec.tensor.data.resize(static_cast<std::size_t>(rows) * cols);
        for (auto& v : rec.tensor.data) {
            float fv;
            if (!in.read(reinterpret_cast<char*>(&fv), 4))
                throw FormatError("truncated feature data in " + path);
            v = fv;
        }
        records.push_back(std::move(rec));
    }
    return records;
}

} // namespace knock
