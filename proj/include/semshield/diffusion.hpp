#pragma once

// Variance schedule, forward diffusion, denoiser training, reverse-process
// denoising and SNR-matched time-step estimation. The denoiser operates on
// channel latents, sitting in front of the semantic receiver.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "semshield/codec.hpp"
#include "semshield/core.hpp"
#include "semshield/nn.hpp"

namespace semshield {

struct VarianceSchedule {
    int T = 0;
    std::vector<double> betas;       // length T, betas[t-1] is beta_t
    std::vector<double> alpha_bars;  // cumulative products of (1 - beta)

    double beta(int t) const { return betas[check(t)]; }
    double alpha_bar(int t) const { return alpha_bars[check(t)]; }

    std::size_t check(int t) const {
        if (t < 1 || t > T) throw std::out_of_range("VarianceSchedule: t out of [1,T]");
        return static_cast<std::size_t>(t - 1);
    }
};

inline VarianceSchedule make_schedule(int T, double beta_start, double beta_end) {
    if (T < 1) throw std::invalid_argument("make_schedule: T must be >= 1");
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
        throw std::invalid_argument("make_schedule: need 0 < beta_start <= beta_end < 1");
    VarianceSchedule s;
    s.T = T;
    s.betas.resize(static_cast<std::size_t>(T));
    s.alpha_bars.resize(static_cast<std::size_t>(T));
    double prod = 1.0;
    for (int t = 0; t < T; ++t) {
        const double frac = (T == 1) ? 0.0 : static_cast<double>(t) / (T - 1);
        const double b = beta_start + (beta_end - beta_start) * frac;
        prod *= 1.0 - b;
        s.betas[static_cast<std::size_t>(t)] = b;
        s.alpha_bars[static_cast<std::size_t>(t)] = prod;
    }
    return s;
}

// Closed-form marginal of the forward Markov chain:
// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps.
inline LatentSignal forward_diffuse(const LatentSignal& x0, int t, const LatentSignal& eps,
                                    const VarianceSchedule& sch) {
    if (x0.dim() != eps.dim()) throw std::invalid_argument("forward_diffuse: dim mismatch");
    const double ab = sch.alpha_bar(t);
    return LatentSignal(std::sqrt(ab) * x0.values + std::sqrt(1.0 - ab) * eps.values);
}

// SNR of the forward marginal at step t; strictly decreasing in t.
inline double forward_snr(int t, const VarianceSchedule& sch) {
    const double ab = sch.alpha_bar(t);
    return ab / (1.0 - ab);
}

// Step whose forward-process SNR is closest (in log domain) to the observed
// one; ties break toward larger t, i.e. more denoising.
inline int estimate_timestep(double observed_snr_linear, const VarianceSchedule& sch) {
    if (!(observed_snr_linear > 0.0))
        throw std::invalid_argument("estimate_timestep: SNR must be > 0");
    const double target = std::log(observed_snr_linear);
    int best = 1;
    double best_dist = std::abs(std::log(forward_snr(1, sch)) - target);
    for (int t = 2; t <= sch.T; ++t) {
        const double d = std::abs(std::log(forward_snr(t, sch)) - target);
        if (d <= best_dist) {  // <= keeps the larger t on ties
            best_dist = d;
            best = t;
        }
    }
    return best;
}

inline Mat timestep_embedding(int t, Eigen::Index emb_dim, Eigen::Index batch) {
    Vec e(emb_dim);
    for (Eigen::Index i = 0; i < emb_dim / 2; ++i) {
        const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) /
                                     static_cast<double>(emb_dim / 2));
        e[2 * i] = std::sin(t * freq);
        e[2 * i + 1] = std::cos(t * freq);
    }
    return e.replicate(1, batch);
}

struct DenoiserModel {
    nn::Mlp net;  // [latent ; time-embedding] -> hidden -> hidden -> latent
    VarianceSchedule schedule;
    Eigen::Index latent_dim = 64;
    Eigen::Index emb_dim = 32;
    Eigen::Index hidden_dim = 128;
    std::uint64_t train_seed = 0;

    static DenoiserModel init(Eigen::Index latent_dim, const VarianceSchedule& sch,
                              std::uint64_t seed, Eigen::Index hidden_dim = 128) {
        DenoiserModel m;
        m.latent_dim = latent_dim;
        m.hidden_dim = hidden_dim;
        m.schedule = sch;
        m.train_seed = seed;
        RngStream rng(seed, /*stream*/ 0xD1FF);
        m.net = nn::Mlp({{latent_dim + m.emb_dim, hidden_dim, nn::Act::Relu},
                         {hidden_dim, hidden_dim, nn::Act::Relu},
                         {hidden_dim, latent_dim, nn::Act::None}},
                        rng);
        return m;
    }

    // Predicted noise for a batch at a common time-step.
    Mat predict_eps(const Mat& x_t, int t) const {
        Mat in(latent_dim + emb_dim, x_t.cols());
        in.topRows(latent_dim) = x_t;
        in.bottomRows(emb_dim) = timestep_embedding(t, emb_dim, x_t.cols());
        return net.forward(in);
    }
};

struct DenoiseOptions {
    bool stochastic = false;   // ancestral sampling instead of the deterministic update
    RngStream* rng = nullptr;  // required when stochastic
    int stride = 1;            // skip steps in the reverse pass (deterministic update only)
};

// Reverse pass from t_start down to 1; t_start = 0 returns the input
// unchanged. The deterministic update moves through predicted-x0 space,
// which keeps acceptance runs reproducible.
inline Mat denoise_batch(const Mat& x_noisy, int t_start, const DenoiserModel& m,
                         const DenoiseOptions& opt = {}) {
    if (t_start < 0 || t_start > m.schedule.T)
        throw std::out_of_range("denoise: t_start out of [0,T]");
    if (t_start == 0) return x_noisy;
    if (opt.stochastic && opt.rng == nullptr)
        throw std::invalid_argument("denoise: stochastic mode needs an RngStream");

    Mat x = x_noisy;
    int t = t_start;
    while (t >= 1) {
        const double ab = m.schedule.alpha_bar(t);
        const Mat eps_hat = m.predict_eps(x, t);
        const Mat x0_hat = (x - std::sqrt(1.0 - ab) * eps_hat) / std::sqrt(ab);
        const int t_prev = (t == 1) ? 0 : std::max(0, t - opt.stride);
        if (t_prev == 0) {
            x = x0_hat;
            break;
        }
        const double ab_prev = m.schedule.alpha_bar(t_prev);
        if (opt.stochastic) {
            const double beta = m.schedule.beta(t);
            const double ab_cur = ab;
            const double var = beta * (1.0 - ab_prev) / (1.0 - ab_cur);
            x = std::sqrt(ab_prev) * x0_hat +
                std::sqrt(std::max(0.0, 1.0 - ab_prev - var)) * eps_hat +
                std::sqrt(var) * opt.rng->gaussian_mat(x.rows(), x.cols());
        } else {
            x = std::sqrt(ab_prev) * x0_hat + std::sqrt(1.0 - ab_prev) * eps_hat;
        }
        t = t_prev;
    }
    return x;
}

inline LatentSignal denoise(const LatentSignal& x_noisy, int t_start, const DenoiserModel& m,
                            const DenoiseOptions& opt = {}) {
    if (t_start == 0) return x_noisy;
    return LatentSignal(denoise_batch(x_noisy.values, t_start, m, opt));
}

// Channel-to-diffusion glue: select the time-step matching the observed SNR,
// scale the received signal so its total power matches the unit power of the
// forward marginal, then run the reverse pass. The channel yields x0 + sigma n
// with power 1 + sigma^2, so the scale is 1/sqrt(1 + sigma^2); when the SNR
// sits exactly on the schedule grid this equals sqrt(abar_t), and under
// mismatch (observed SNR below forward_snr(T)) it keeps the input at the
// power the model was trained on.
inline Mat receive_and_denoise_batch(const Mat& x_received, double observed_snr_linear,
                                     const DenoiserModel& m, const DenoiseOptions& opt = {}) {
    const int t = estimate_timestep(observed_snr_linear, m.schedule);
    const Mat scaled = x_received / std::sqrt(1.0 + 1.0 / observed_snr_linear);
    return denoise_batch(scaled, t, m, opt);
}

inline LatentSignal receive_and_denoise(const LatentSignal& x_received, double observed_snr_linear,
                                        const DenoiserModel& m, const DenoiseOptions& opt = {}) {
    return LatentSignal(receive_and_denoise_batch(x_received.values, observed_snr_linear, m, opt));
}

// eps-prediction MSE of the model over a latent set with a fixed noise draw.
inline double denoiser_validation_loss(const DenoiserModel& m, const Mat& latents, RngStream& rng) {
    double loss = 0.0;
    int count = 0;
    for (Eigen::Index start = 0; start < latents.cols(); start += 256) {
        const Eigen::Index bs = std::min<Eigen::Index>(256, latents.cols() - start);
        const int t = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(m.schedule.T)));
        const double ab = m.schedule.alpha_bar(t);
        const Mat x0 = latents.middleCols(start, bs);
        const Mat eps = rng.gaussian_mat(x0.rows(), bs);
        const Mat x_t = std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps;
        loss += (m.predict_eps(x_t, t) - eps).array().square().mean();
        ++count;
    }
    return count ? loss / count : 0.0;
}

inline DenoiserModel train_denoiser(const Mat& latents, const VarianceSchedule& sch,
                                    const TrainConfig& cfg, TrainOutcome* outcome = nullptr) {
    cfg.validate();
    if (latents.cols() == 0) throw std::invalid_argument("train_denoiser: empty latent set");

    DenoiserModel m = DenoiserModel::init(latents.rows(), sch, cfg.seed);
    nn::Adam opt(cfg.learning_rate);
    RngStream rng(cfg.seed, /*stream*/ 0x7249);
    RngStream val_rng(cfg.seed, /*stream*/ 0x7A1);

    const double initial_val = denoiser_validation_loss(m, latents, val_rng);

    const Eigen::Index n = latents.cols();
    const Eigen::Index bs = std::min<Eigen::Index>(cfg.batch_size, n);
    const int steps_per_epoch = static_cast<int>(n / bs);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (int step = 0; step < steps_per_epoch; ++step) {
            Mat in(m.latent_dim + m.emb_dim, bs);
            Mat eps(m.latent_dim, bs);
            for (Eigen::Index j = 0; j < bs; ++j) {
                const Eigen::Index idx =
                    static_cast<Eigen::Index>(rng.uniform_int(static_cast<std::uint64_t>(n)));
                const int t = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(sch.T)));
                const double ab = sch.alpha_bar(t);
                eps.col(j) = rng.gaussian_vec(m.latent_dim);
                in.col(j).head(m.latent_dim) =
                    std::sqrt(ab) * latents.col(idx) + std::sqrt(1.0 - ab) * eps.col(j);
                in.col(j).tail(m.emb_dim) = timestep_embedding(t, m.emb_dim, 1);
            }
            nn::Cache cache;
            const Mat eps_hat = m.net.forward(in, &cache);
            const Mat err = eps_hat - eps;
            nn::Grads g;
            m.net.backward(err * (2.0 / static_cast<double>(err.size())), cache, &g);
            opt.step(m.net, g);
        }
    }

    RngStream val_rng2(cfg.seed, /*stream*/ 0x7A1);
    const double final_val = denoiser_validation_loss(m, latents, val_rng2);
    if (outcome) {
        outcome->final_loss = final_val;
        outcome->converged = cfg.epochs == 0 || final_val < initial_val;
    }
    return m;
}

}  // namespace semshield
