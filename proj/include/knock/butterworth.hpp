#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "knock/error.hpp"
#include "knock/signal.hpp"

namespace knock {

/**
 * Digital Butterworth low-pass, designed from the analog prototype through
 * the bilinear transform with frequency prewarping. b are feedforward and
 * a feedback coefficients, a[0] = 1. The design has unity DC gain and its
 * magnitude is exactly 1/sqrt(2) at the cutoff.
 */
struct ButterworthFilter {
    int order = 0;
    double cutoff_hz = 0.0;
    int sample_rate = 0;
    std::vector<double> b;
    std::vector<double> a;

    /// Magnitude of H(e^{j 2 pi f / fs}) evaluated from the coefficients.
    double magnitude_at(double freq_hz) const {
        const double w = 2.0 * M_PI * freq_hz / sample_rate;
        const std::complex<double> z(std::cos(w), std::sin(w));
        std::complex<double> num(0.0, 0.0), den(0.0, 0.0), zp(1.0, 0.0);
        for (std::size_t i = 0; i < b.size(); ++i) {
            num += b[i] * zp;
            if (i < a.size()) den += a[i] * zp;
            zp /= z; // powers of z^-1
        }
        return std::abs(num / den);
    }

    /// Pole locations in the z-plane (roots of the feedback polynomial).
    std::vector<std::complex<double>> poles() const { return poles_; }

    std::vector<std::complex<double>> poles_;
};

namespace detail {

/// Expand prod_k (x - roots[k]) into monic polynomial coefficients.
inline std::vector<std::complex<double>> poly_from_roots(
    const std::vector<std::complex<double>>& roots) {
    std::vector<std::complex<double>> c{1.0};
    for (const auto& r : roots) {
        std::vector<std::complex<double>> next(c.size() + 1, 0.0);
        for (std::size_t i = 0; i < c.size(); ++i) {
            next[i] += c[i];
            next[i + 1] -= c[i] * r;
        }
        c = std::move(next);
    }
    return c;
}

} // namespace detail

/**
 * Design an order-n Butterworth low-pass with the given cutoff.
 * Requires 0 < cutoff < fs/2 and 1 <= order <= 10.
 */
inline ButterworthFilter butter_lowpass(double cutoff_hz, int sample_rate, int order) {
    const double nyq = 0.5 * sample_rate;
    if (!(cutoff_hz > 0.0 && cutoff_hz < nyq))
        throw ArgumentError("butter_lowpass: cutoff must lie in (0, Nyquist)");
    if (order < 1 || order > 10)
        throw ArgumentError("butter_lowpass: order must be in [1, 10]");

    // prewarped analog cutoff for the bilinear transform z = (1+s)/(1-s)
    const double normal_cutoff = cutoff_hz / nyq;
    const double warped = std::tan(M_PI * normal_cutoff / 2.0);

    std::vector<std::complex<double>> zpoles;
    zpoles.reserve(order);
    for (int k = 1; k <= order; ++k) {
        const double theta = M_PI * (2.0 * k + order - 1.0) / (2.0 * order);
        const std::complex<double> s =
            warped * std::complex<double>(std::cos(theta), std::sin(theta));
        zpoles.push_back((1.0 + s) / (1.0 - s));
    }

    const auto a_cplx = detail::poly_from_roots(zpoles);
    // n zeros at z = -1
    std::vector<std::complex<double>> zzeros(order, std::complex<double>(-1.0, 0.0));
    const auto b_cplx = detail::poly_from_roots(zzeros);

    // normalize for unity gain at DC (z = 1)
    std::complex<double> num(0.0, 0.0), den(0.0, 0.0);
    for (const auto& c : b_cplx) num += c;
    for (const auto& c : a_cplx) den += c;
    const std::complex<double> gain = den / num;

    ButterworthFilter f;
    f.order = order;
    f.cutoff_hz = cutoff_hz;
    f.sample_rate = sample_rate;
    f.b.resize(b_cplx.size());
    f.a.resize(a_cplx.size());
    for (std::size_t i = 0; i < b_cplx.size(); ++i) f.b[i] = (b_cplx[i] * gain).real();
    for (std::size_t i = 0; i < a_cplx.size(); ++i) f.a[i] = a_cplx[i].real();
    f.poles_ = zpoles;
    return f;
}

/**
 * Run the filter over a signal (direct form II transposed, zero initial
 * state). Output length equals input length.
 */
inline Signal butter_lowpass_filter(const Signal& x, const ButterworthFilter& filt) {
    if (filt.sample_rate != x.sample_rate)
        throw ArgumentError("butter_lowpass_filter: sample rate mismatch");
    Signal out;
    out.sample_rate = x.sample_rate;
    out.samples.resize(x.size());
    const std::size_t n = filt.a.size(); // order + 1, always >= 2
    std::vector<double> z(n - 1, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x.samples[i];
        const double yi = filt.b[0] * xi + z[0];
        for (std::size_t k = 0; k + 1 < z.size(); ++k)
            z[k] = filt.b[k + 1] * xi - filt.a[k + 1] * yi + z[k + 1];
        z[z.size() - 1] = filt.b[n - 1] * xi - filt.a[n - 1] * yi;
        out.samples[i] = yi;
    }
    return out;
}

} // namespace knock
