#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "knock/error.hpp"

namespace knock {

/// In-place iterative radix-2 FFT. Size must be a power of two.
inline void fft_inplace(std::vector<std::complex<double>>& a, bool inverse = false) {
    const std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw ArgumentError("fft size must be a power of two, got " + std::to_string(n));

    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * M_PI / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }

    if (inverse) {
        const double inv_n = 1.0 / static_cast<double>(n);
        for (auto& x : a) x *= inv_n;
    }
}

/// Forward FFT of a real frame; returns all n complex bins.
inline std::vector<std::complex<double>> fft_real(const std::vector<double>& frame) {
    std::vector<std::complex<double>> a(frame.begin(), frame.end());
    fft_inplace(a);
    return a;
}

/// Smallest power of two >= n.
inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

/// Periodic Hann window (sums to a constant under 50% overlap-add).
inline std::vector<double> hann_window(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n));
    return w;
}

/**
 * Dominant frequency of a signal segment, in Hz, estimated from the peak
 * magnitude bin of a zero-padded FFT. Bin 0 (DC) is excluded.
 */
inline double dominant_frequency(const std::vector<double>& x, int sample_rate,
                                 std::size_t min_fft = 8192) {
    const std::size_t n = next_pow2(std::max(x.size(), min_fft));
    std::vector<std::complex<double>> a(n, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) a[i] = x[i];
    fft_inplace(a);
    std::size_t best = 1;
    double best_mag = 0.0;
    for (std::size_t k = 1; k <= n / 2; ++k) {
        const double m = std::abs(a[k]);
        if (m > best_mag) {
            best_mag = m;
            best = k;
        }
    }
    return static_cast<double>(best) * sample_rate / static_cast<double>(n);
}

/**
 * STFT as a frames x bins complex matrix (bins = fft_size/2 + 1, real-input
 * symmetry). The signal is zero-padded at the tail so every sample is
 * covered by a whole frame.
 */
struct Stft {
    std::vector<std::vector<std::complex<double>>> frames; // [frame][bin]
    std::size_t fft_size = 0;
    std::size_t hop = 0;
    std::size_t signal_len = 0;
};

inline Stft stft_forward(const std::vector<double>& x, std::size_t fft_size,
                         std::size_t hop) {
    if (x.size() < fft_size)
        throw ArgumentError("stft: input shorter than the analysis window");
    Stft s;
    s.fft_size = fft_size;
    s.hop = hop;
    s.signal_len = x.size();
    const auto win = hann_window(fft_size);
    const std::size_t n_frames = 1 + (x.size() - 1) / hop;
    s.frames.reserve(n_frames);
    std::vector<std::complex<double>> buf(fft_size);
    for (std::size_t f = 0; f < n_frames; ++f) {
        const std::size_t start = f * hop;
        for (std::size_t i = 0; i < fft_size; ++i) {
            const std::size_t idx = start + i;
            buf[i] = idx < x.size() ? x[idx] * win[i] : 0.0;
        }
        fft_inplace(buf);
        s.frames.emplace_back(buf.begin(), buf.begin() + fft_size / 2 + 1);
    }
    return s;
}

/**
 * Inverse STFT via windowed overlap-add with per-sample normalization by
 * the accumulated squared window. Exactly inverts stft_forward wherever the
 * window sum is nonzero.
 */
inline std::vector<double> stft_inverse(const Stft& s) {
    const auto win = hann_window(s.fft_size);
    std::vector<double> acc(s.signal_len + s.fft_size, 0.0);
    std::vector<double> norm(s.signal_len + s.fft_size, 0.0);
    std::vector<std::complex<double>> buf(s.fft_size);
    for (std::size_t f = 0; f < s.frames.size(); ++f) {
        for (std::size_t k = 0; k <= s.fft_size / 2; ++k) buf[k] = s.frames[f][k];
        for (std::size_t k = s.fft_size / 2 + 1; k < s.fft_size; ++k)
            buf[k] = std::conj(s.frames[f][s.fft_size - k]);
        fft_inplace(buf, true);
        const std::size_t start = f * s.hop;
        for (std::size_t i = 0; i < s.fft_size && start + i < acc.size(); ++i) {
            acc[start + i] += buf[i].real() * win[i];
            norm[start + i] += win[i] * win[i];
        }
    }
    std::vector<double> out(s.signal_len);
    for (std::size_t i = 0; i < s.signal_len; ++i)
        out[i] = norm[i] > 1e-12 ? acc[i] / norm[i] : 0.0;
    return out;
}

} // namespace knock
