#pragma once

// Small DSP kernel shared by the jammer and the defense chain: radix-2 FFT,
// power spectra and the spectral summary statistics used for identification.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "semshield/core.hpp"

namespace semshield::dsp {

using cd = std::complex<double>;

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t floor_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p * 2 <= n) p *= 2;
    return p;
}

// In-place iterative radix-2 FFT. a.size() must be a power of two.
inline void fft(std::vector<cd>& a, bool inverse = false) {
    const std::size_t n = a.size();
    if (!is_pow2(n)) throw std::invalid_argument("fft: size must be a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * M_PI / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        const cd wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cd w(1.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const cd u = a[i + k];
                const cd v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse)
        for (auto& x : a) x /= static_cast<double>(n);
}

// Power spectrum |X_k|^2 / n of the first floor_pow2(v.size()) samples,
// one-sided (bins 0 .. n/2 inclusive, mirrored energy folded in).
inline std::vector<double> power_spectrum(const Vec& v) {
    const std::size_t n = floor_pow2(static_cast<std::size_t>(v.size()));
    std::vector<cd> a(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = v[static_cast<Eigen::Index>(i)];
    fft(a);
    std::vector<double> p(n / 2 + 1);
    const double scale = 1.0 / static_cast<double>(n);
    p[0] = std::norm(a[0]) * scale;
    p[n / 2] = std::norm(a[n / 2]) * scale;
    for (std::size_t k = 1; k < n / 2; ++k)
        p[k] = (std::norm(a[k]) + std::norm(a[n - k])) * scale;
    return p;
}

// Largest spectral bin's share of total energy, on the full-length spectrum.
inline double dominant_bin_fraction(const Vec& v) {
    const auto p = power_spectrum(v);
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    if (total <= 0.0) return 0.0;
    return *std::max_element(p.begin(), p.end()) / total;
}

// Welch-averaged power spectrum: rectangular windows of length seg_len with
// 50% overlap. Averaging matters here: single-periodogram bins of white
// noise are exponential variates and never flatten out, regardless of
// signal length.
inline std::vector<double> welch_spectrum(const Vec& v, std::size_t seg_len = 8) {
    const auto n = static_cast<std::size_t>(v.size());
    if (n < seg_len) throw std::invalid_argument("welch_spectrum: signal shorter than segment");
    const std::size_t step = std::max<std::size_t>(1, seg_len / 2);
    std::vector<double> acc(seg_len / 2 + 1, 0.0);
    std::vector<cd> a(seg_len);
    std::size_t nseg = 0;
    for (std::size_t start = 0; start + seg_len <= n; start += step, ++nseg) {
        for (std::size_t i = 0; i < seg_len; ++i)
            a[i] = v[static_cast<Eigen::Index>(start + i)];
        fft(a);
        const double scale = 1.0 / static_cast<double>(seg_len);
        acc[0] += std::norm(a[0]) * scale;
        acc[seg_len / 2] += std::norm(a[seg_len / 2]) * scale;
        for (std::size_t k = 1; k < seg_len / 2; ++k)
            acc[k] += (std::norm(a[k]) + std::norm(a[seg_len - k])) * scale;
    }
    for (auto& x : acc) x /= static_cast<double>(nseg);
    return acc;
}

// Geometric / arithmetic mean ratio of the Welch spectrum, in [0, 1];
// 1 for a perfectly flat spectrum. The DC and Nyquist bins are excluded:
// they carry half the degrees of freedom of the interior bins and their
// variance drags the geometric mean down on short records.
inline double spectral_flatness(const Vec& v, std::size_t seg_len = 8) {
    const auto full = welch_spectrum(v, seg_len);
    const std::vector<double> p(full.begin() + 1, full.end() - 1);
    double log_sum = 0.0, sum = 0.0;
    for (double x : p) {
        const double xx = std::max(x, 1e-300);
        log_sum += std::log(xx);
        sum += xx;
    }
    const double gm = std::exp(log_sum / static_cast<double>(p.size()));
    const double am = sum / static_cast<double>(p.size());
    if (am <= 0.0) return 0.0;
    return std::min(1.0, gm / am);
}

// Robust peak-to-average power ratio: 85th-percentile sample power over mean
// power. The raw sample maximum of Gaussian noise grows like log(dim) and
// would cross any fixed threshold at large dim, so a quantile peak is used.
inline double papr(const Vec& v) {
    const auto n = static_cast<std::size_t>(v.size());
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = v[static_cast<Eigen::Index>(i)];
        p[i] = x * x;
    }
    const double mean = std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(n);
    if (mean <= 0.0) return 0.0;
    const std::size_t k = static_cast<std::size_t>(0.85 * static_cast<double>(n - 1));
    std::nth_element(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(k), p.end());
    return p[k] / mean;
}

// Standardized fourth-order cumulant (excess kurtosis); 0 for Gaussian data.
inline double excess_kurtosis(const Vec& v) {
    const double mean = v.mean();
    const Vec c = v.array() - mean;
    const double m2 = c.array().square().mean();
    if (m2 <= 0.0) return 0.0;
    const double m4 = c.array().square().square().mean();
    return m4 / (m2 * m2) - 3.0;
}

}  // namespace semshield::dsp
