#pragma once

// Threat-signal generators: the four high-power jamming waveforms and the
// gradient-based low-power adversarial attacks (fgsm / bim / pgd). Every
// emitted signal is power-projected to its JSR target as the last operation.

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "semshield/core.hpp"

namespace semshield {

enum class JamKind { pulse, cw, noise, sweep, adversarial };
enum class AdvMethod { fgsm, bim, pgd };

inline std::string to_string(JamKind k) {
    switch (k) {
        case JamKind::pulse: return "pulse";
        case JamKind::cw: return "cw";
        case JamKind::noise: return "noise";
        case JamKind::sweep: return "sweep";
        case JamKind::adversarial: return "adversarial";
    }
    return "?";
}

inline JamKind jam_kind_from_string(const std::string& s) {
    if (s == "pulse") return JamKind::pulse;
    if (s == "cw") return JamKind::cw;
    if (s == "noise") return JamKind::noise;
    if (s == "sweep") return JamKind::sweep;
    if (s == "adversarial") return JamKind::adversarial;
    throw std::invalid_argument("unknown jamming kind: " + s);
}

inline AdvMethod adv_method_from_string(const std::string& s) {
    if (s == "fgsm") return AdvMethod::fgsm;
    if (s == "bim") return AdvMethod::bim;
    if (s == "pgd") return AdvMethod::pgd;
    throw std::invalid_argument("unknown adversarial method: " + s);
}

// Declarative description of a jamming waveform. params carries the
// per-kind knobs; unset keys fall back to the defaults below.
struct JammerProfile {
    JamKind kind = JamKind::noise;
    double jsr_db = 40.0;
    std::map<std::string, double> params;  // duty, period, freq, phase, freq_start,
                                           // freq_end, iterations, step_size
    AdvMethod method = AdvMethod::pgd;
    std::uint64_t seed = 0;

    double param(const std::string& key, double fallback) const {
        const auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    }

    void validate() const {
        const double duty = param("duty", 0.25);
        if (!(duty > 0.0 && duty <= 1.0)) throw std::invalid_argument("JammerProfile: duty out of (0,1]");
        for (const char* key : {"freq", "freq_start", "freq_end"}) {
            const auto it = params.find(key);
            if (it != params.end() && !(it->second >= 0.0 && it->second <= 0.5))
                throw std::invalid_argument("JammerProfile: normalized frequency out of [0,0.5]");
        }
        // iterations = 0 is the explicit "no perturbation" sentinel
        if (kind == JamKind::adversarial && param("iterations", 20.0) < 0.0)
            throw std::invalid_argument("JammerProfile: iterations must be >= 0");
    }
};

// Exact power projection: scale each column to mean-square power `power`.
inline void project_power_columns(Mat& m, double power) {
    const double target = std::sqrt(power * static_cast<double>(m.rows()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const double n = m.col(c).norm();
        if (n > 0.0) m.col(c) *= target / n;
    }
}

// High-power jamming waveform at measure_power = db_to_linear(jsr_db)
// relative to the unit-power signal.
inline LatentSignal gen_jamming(const JammerProfile& p, Eigen::Index dim, RngStream& rng) {
    if (p.kind == JamKind::adversarial)
        throw std::invalid_argument("gen_jamming: adversarial kind needs gen_adversarial");
    if (dim < 1) throw std::invalid_argument("gen_jamming: dim must be >= 1");
    p.validate();

    Vec w = Vec::Zero(dim);
    switch (p.kind) {
        case JamKind::pulse: {
            const double duty = p.param("duty", 0.25);
            const auto period = static_cast<Eigen::Index>(
                p.param("period", static_cast<double>(dim) / 4.0));
            const Eigen::Index per = std::max<Eigen::Index>(1, period);
            const Eigen::Index on = std::max<Eigen::Index>(
                1, static_cast<Eigen::Index>(std::ceil(duty * static_cast<double>(per))));
            const auto offset = static_cast<Eigen::Index>(rng.uniform_int(static_cast<std::uint64_t>(per)));
            const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
            for (Eigen::Index i = 0; i < dim; ++i)
                if ((i + offset) % per < on) w[i] = sign;
            break;
        }
        case JamKind::cw: {
            // frequency snapped to the DFT grid so the tone lands in one bin
            const double f_raw = p.param("freq", 0.125);
            const double k = std::round(f_raw * static_cast<double>(dim));
            const double f = k / static_cast<double>(dim);
            const double phase = p.param("phase", 2.0 * M_PI * rng.uniform());
            for (Eigen::Index i = 0; i < dim; ++i)
                w[i] = std::cos(2.0 * M_PI * f * static_cast<double>(i) + phase);
            break;
        }
        case JamKind::noise:
            w = rng.gaussian_vec(dim);
            break;
        case JamKind::sweep: {
            const double f0 = p.param("freq_start", 0.05);
            const double f1 = p.param("freq_end", 0.20);
            const double len = p.param("sweep_length", static_cast<double>(dim));
            const double phase = 2.0 * M_PI * rng.uniform();
            for (Eigen::Index i = 0; i < dim; ++i) {
                const double x = static_cast<double>(i);
                const double ph = 2.0 * M_PI * (f0 * x + (f1 - f0) * x * x / (2.0 * len));
                w[i] = std::cos(ph + phase);
            }
            break;
        }
        case JamKind::adversarial:
            break;  // unreachable
    }
    Mat m = w;
    project_power_columns(m, db_to_linear(p.jsr_db));
    return LatentSignal(m.col(0));
}

// Differentiable map from channel input to a scalar loss; exposes the
// gradient w.r.t. the channel input. Columns are independent samples.
struct DifferentiablePipeline {
    virtual ~DifferentiablePipeline() = default;
    virtual double loss_and_grad(const Mat& z_in, Mat* dz) const = 0;
};

struct AdversarialResult {
    Mat delta;                // one perturbation column per input column
    bool zero_grad_warning = false;
};

// Power-constrained gradient attack against the supplied pipeline. The final
// projection enforces measure_power(delta) = db_to_linear(jsr_db) exactly;
// fgsm takes a single signed-gradient step, bim iterates signed steps with
// per-step projection, pgd iterates L2-normalized steps from a random start
// inside the power ball.
inline AdversarialResult gen_adversarial_batch(const DifferentiablePipeline& pipeline,
                                               const Mat& z_clean, const JammerProfile& p) {
    if (p.kind != JamKind::adversarial)
        throw std::invalid_argument("gen_adversarial: profile kind must be adversarial");
    p.validate();
    const double power = db_to_linear(p.jsr_db);
    const double radius = std::sqrt(power * static_cast<double>(z_clean.rows()));
    int iters = static_cast<int>(p.param("iterations", p.method == AdvMethod::fgsm ? 1.0 : 20.0));
    if (p.method == AdvMethod::fgsm) iters = std::min(iters, 1);
    AdversarialResult res;
    res.delta = Mat::Zero(z_clean.rows(), z_clean.cols());
    if (iters == 0) return res;  // sentinel: zero perturbation

    RngStream rng(p.seed, /*stream*/ 0xADE2);
    const double step = p.param("step_size", radius / 8.0);

    if (p.method == AdvMethod::pgd) {
        res.delta = rng.gaussian_mat(z_clean.rows(), z_clean.cols());
        project_power_columns(res.delta, power);
        res.delta *= rng.uniform();  // random start within the ball
    }

    for (int it = 0; it < iters; ++it) {
        Mat grad;
        pipeline.loss_and_grad(z_clean + res.delta, &grad);
        for (Eigen::Index c = 0; c < grad.cols(); ++c) {
            const double gn = grad.col(c).norm();
            if (gn < 1e-12) {
                // dead gradient: fall back to a random direction
                grad.col(c) = rng.gaussian_vec(grad.rows());
                res.zero_grad_warning = true;
            }
        }
        if (p.method == AdvMethod::pgd) {
            for (Eigen::Index c = 0; c < grad.cols(); ++c)
                res.delta.col(c) += step * grad.col(c) / grad.col(c).norm();
        } else {
            res.delta += step * grad.array().sign().matrix();
        }
        project_power_columns(res.delta, power);
    }
    project_power_columns(res.delta, power);
    return res;
}

inline LatentSignal gen_adversarial(const DifferentiablePipeline& pipeline,
                                    const LatentSignal& x_clean, const JammerProfile& p,
                                    bool* zero_grad_warning = nullptr) {
    const AdversarialResult r = gen_adversarial_batch(pipeline, x_clean.values, p);
    if (zero_grad_warning) *zero_grad_warning = r.zero_grad_warning;
    return LatentSignal(r.delta.col(0));
}

}  // namespace semshield
