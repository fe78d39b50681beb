#pragma once

// Receiver chain against jamming: JSR estimation, identification, coarse
// reconstruct-and-subtract cancellation, and the assembled defend() pipeline
// (identify -> coarse cancel when high-power -> fine denoising).

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "semshield/core.hpp"
#include "semshield/diffusion.hpp"
#include "semshield/dsp.hpp"
#include "semshield/jammer.hpp"

namespace semshield {

inline constexpr double kJsrFloor = 1e-6;
inline constexpr double kJsrBranchThresholdDb = 0.0;  // the paper's regimes sit at +40 / -10 dB

struct JammingFeatures {
    double estimated_jsr_db = 0.0;
    double papr = 0.0;
    double spectral_flatness = 0.0;
    double dominant_bin_fraction = 0.0;
    double fourth_order_cumulant = 0.0;
};

enum class JamBranch { high_power, low_power };

struct IdentificationResult {
    JamBranch branch = JamBranch::low_power;
    JamKind kind = JamKind::adversarial;  // adversarial_or_none when low_power
    JammingFeatures features;
};

// Interference power = max(measure_power(y) - 1 - noise_power, eps), in dB.
// Relies on the unit-power transmitter convention.
inline double estimate_jsr(const LatentSignal& y, double noise_power) {
    if (noise_power < 0.0) throw std::invalid_argument("estimate_jsr: negative noise power");
    const double interference = std::max(measure_power(y) - 1.0 - noise_power, kJsrFloor);
    return linear_to_db(interference);
}

inline JammingFeatures extract_features(const LatentSignal& y, double noise_power = 0.0) {
    if (y.dim() < 64) throw std::invalid_argument("extract_features: dim must be >= 64");
    JammingFeatures f;
    f.estimated_jsr_db = estimate_jsr(y, noise_power);
    f.papr = dsp::papr(y.values);
    f.spectral_flatness = dsp::spectral_flatness(y.values);
    f.dominant_bin_fraction = dsp::dominant_bin_fraction(y.values);
    f.fourth_order_cumulant = dsp::excess_kurtosis(y.values);
    return f;
}

// Two-stage rule: JSR threshold splits high- and low-power, then a fixed
// decision tree on the expert features resolves the high-power kind.
inline IdentificationResult identify_jamming(const LatentSignal& y, double noise_power) {
    IdentificationResult r;
    r.features = extract_features(y, noise_power);
    if (r.features.estimated_jsr_db <= kJsrBranchThresholdDb) {
        r.branch = JamBranch::low_power;
        r.kind = JamKind::adversarial;  // adversarial or none
        return r;
    }
    r.branch = JamBranch::high_power;
    if (r.features.dominant_bin_fraction >= 0.5)
        r.kind = JamKind::cw;
    else if (r.features.papr >= 3.0)
        r.kind = JamKind::pulse;
    else if (r.features.spectral_flatness >= 0.8)
        r.kind = JamKind::noise;
    else
        r.kind = JamKind::sweep;
    return r;
}

namespace detail {

using dsp::cd;

inline std::vector<cd> naive_dft(const Vec& v) {
    const auto n = static_cast<std::size_t>(v.size());
    if (dsp::is_pow2(n)) {
        std::vector<cd> a(n);
        for (std::size_t i = 0; i < n; ++i) a[i] = v[static_cast<Eigen::Index>(i)];
        dsp::fft(a);
        return a;
    }
    std::vector<cd> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        cd acc(0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double ang = -2.0 * M_PI * static_cast<double>(k * i) / static_cast<double>(n);
            acc += v[static_cast<Eigen::Index>(i)] * cd(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    return out;
}

inline Vec naive_idft(std::vector<cd> spec) {
    const std::size_t n = spec.size();
    if (dsp::is_pow2(n)) {
        dsp::fft(spec, /*inverse*/ true);
        Vec v(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = spec[i].real();
        return v;
    }
    Vec v(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        cd acc(0.0);
        for (std::size_t k = 0; k < n; ++k) {
            const double ang = 2.0 * M_PI * static_cast<double>(k * i) / static_cast<double>(n);
            acc += spec[k] * cd(std::cos(ang), std::sin(ang));
        }
        v[static_cast<Eigen::Index>(i)] = acc.real() / static_cast<double>(n);
    }
    return v;
}

// Energy of the least-squares tone fit at normalized frequency f.
inline double tone_fit(const Vec& y, double f, double* a_out = nullptr, double* b_out = nullptr) {
    const auto n = static_cast<double>(y.size());
    double cc = 0.0, ss = 0.0, cs = 0.0, yc = 0.0, ys = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double ang = 2.0 * M_PI * f * static_cast<double>(i);
        const double c = std::cos(ang), s = std::sin(ang);
        cc += c * c;
        ss += s * s;
        cs += c * s;
        yc += y[i] * c;
        ys += y[i] * s;
    }
    const double det = cc * ss - cs * cs;
    double a, b;
    if (std::abs(det) < 1e-9 * n * n) {  // f near 0 or 0.5: sine column degenerate
        a = (cc > 0.0) ? yc / cc : 0.0;
        b = 0.0;
    } else {
        a = (ss * yc - cs * ys) / det;
        b = (cc * ys - cs * yc) / det;
    }
    if (a_out) *a_out = a;
    if (b_out) *b_out = b;
    return a * yc + b * ys;  // energy captured by the fit
}

}  // namespace detail

// Reconstruct-and-subtract for a known high-power kind. Pulse: detect
// positions by amplitude threshold at 5x the non-jammed RMS and subtract the
// mean amplitude. CW: refine the dominant-bin frequency, least-squares fit
// amplitude/phase, subtract the tone. Noise/sweep: spectral subtraction,
// clipping bins that exceed the expected clean level.
inline LatentSignal coarse_cancel(const LatentSignal& y, JamKind kind, double noise_power) {
    const double clean_power = 1.0 + noise_power;
    Vec out = y.values;
    switch (kind) {
        case JamKind::pulse: {
            const double thr = 5.0 * std::sqrt(clean_power);
            double sum = 0.0;
            Eigen::Index count = 0;
            for (Eigen::Index i = 0; i < out.size(); ++i)
                if (std::abs(out[i]) > thr) {
                    sum += out[i];
                    ++count;
                }
            if (count > 0) {
                const double amp = sum / static_cast<double>(count);
                for (Eigen::Index i = 0; i < out.size(); ++i)
                    if (std::abs(out[i]) > thr) out[i] -= amp;
            }
            break;
        }
        case JamKind::cw: {
            const auto spec = detail::naive_dft(out);
            const std::size_t n = spec.size();
            std::size_t kbest = 0;
            double pbest = -1.0;
            for (std::size_t k = 0; k <= n / 2; ++k)
                if (std::norm(spec[k]) > pbest) {
                    pbest = std::norm(spec[k]);
                    kbest = k;
                }
            // golden-section refine around the coarse bin
            const double nd = static_cast<double>(n);
            double lo = (static_cast<double>(kbest) - 1.0) / nd;
            double hi = (static_cast<double>(kbest) + 1.0) / nd;
            lo = std::max(lo, 0.0);
            hi = std::min(hi, 0.5);
            const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
            double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
            double f1 = detail::tone_fit(out, x1), f2 = detail::tone_fit(out, x2);
            for (int it = 0; it < 50; ++it) {
                if (f1 < f2) {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + gr * (hi - lo);
                    f2 = detail::tone_fit(out, x2);
                } else {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - gr * (hi - lo);
                    f1 = detail::tone_fit(out, x1);
                }
            }
            const double f = 0.5 * (lo + hi);
            double a = 0.0, b = 0.0;
            detail::tone_fit(out, f, &a, &b);
            for (Eigen::Index i = 0; i < out.size(); ++i) {
                const double ang = 2.0 * M_PI * f * static_cast<double>(i);
                out[i] -= a * std::cos(ang) + b * std::sin(ang);
            }
            break;
        }
        case JamKind::noise:
        case JamKind::sweep: {
            auto spec = detail::naive_dft(out);
            const double nd = static_cast<double>(spec.size());
            const double clean_bin = nd * clean_power;  // E|Y_k|^2 without jamming
            for (auto& s : spec) {
                const double p = std::norm(s);
                if (p > 3.0 * clean_bin) s *= std::sqrt(clean_bin / p);
            }
            out = detail::naive_idft(std::move(spec));
            break;
        }
        case JamKind::adversarial:
            throw std::invalid_argument("coarse_cancel: unknown high-power kind");
    }
    return LatentSignal(out);
}

// Genie-aided variant: the true jamming vector is known and subtracted
// exactly, leaving signal plus channel noise.
inline LatentSignal coarse_cancel_genie(const LatentSignal& y, const LatentSignal& jam) {
    if (y.dim() != jam.dim()) throw std::invalid_argument("coarse_cancel_genie: dim mismatch");
    return LatentSignal(y.values - jam.values);
}

struct DefendResult {
    LatentSignal output;
    IdentificationResult id;
    double residual_sinr_linear = 0.0;
    int timestep = 0;
};

inline DefendResult defend_detailed(const LatentSignal& y, double noise_power,
                                    const DenoiserModel& m) {
    DefendResult r{y, identify_jamming(y, noise_power), 0.0, 0};
    LatentSignal work = y;
    if (r.id.branch == JamBranch::high_power)
        work = coarse_cancel(y, r.id.kind, noise_power);
    const double residual = std::max(measure_power(work) - 1.0 - noise_power, 0.0);
    r.residual_sinr_linear = 1.0 / std::max(noise_power + residual, 1e-12);
    r.timestep = estimate_timestep(r.residual_sinr_linear, m.schedule);
    r.output = receive_and_denoise(work, r.residual_sinr_linear, m);
    return r;
}

inline LatentSignal defend(const LatentSignal& y, double noise_power, const DenoiserModel& m) {
    return defend_detailed(y, noise_power, m).output;
}

}  // namespace semshield
