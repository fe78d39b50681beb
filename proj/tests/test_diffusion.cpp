#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "semshield/diffusion.hpp"

using namespace semshield;

namespace {

// class-cluster latents: enough structure for the denoiser to learn
Mat cluster_latents(Eigen::Index dim, Eigen::Index n, std::uint64_t seed) {
    RngStream rng(seed, 0);
    Mat prototypes = rng.gaussian_mat(dim, 10);
    Mat out(dim, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vec raw = prototypes.col(i % 10) + 0.3 * rng.gaussian_vec(dim);
        out.col(i) = raw * (std::sqrt(static_cast<double>(dim)) / raw.norm());
    }
    return out;
}

}  // namespace

TEST_CASE("make_schedule closed-form cases") {
    const auto s1 = make_schedule(1, 0.1, 0.1);
    CHECK(s1.alpha_bar(1) == doctest::Approx(0.9).epsilon(1e-12));

    const auto s2 = make_schedule(2, 0.1, 0.2);
    CHECK(s2.beta(1) == doctest::Approx(0.1));
    CHECK(s2.beta(2) == doctest::Approx(0.2));
    CHECK(s2.alpha_bar(1) == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(s2.alpha_bar(2) == doctest::Approx(0.72).epsilon(1e-12));

    CHECK_THROWS(make_schedule(0, 0.1, 0.2));
    CHECK_THROWS(make_schedule(10, 0.0, 0.2));
    CHECK_THROWS(make_schedule(10, 0.3, 0.2));
    CHECK_THROWS(make_schedule(10, 0.3, 1.0));
}

TEST_CASE("make_schedule matches the brute-force product oracle") {
    const auto s = make_schedule(200, 1e-4, 0.05);
    // independent direct product
    double prod = 1.0;
    for (int t = 1; t <= 200; ++t) {
        const double beta = 1e-4 + (0.05 - 1e-4) * static_cast<double>(t - 1) / 199.0;
        prod *= 1.0 - beta;
        CHECK(s.alpha_bar(t) == doctest::Approx(prod).epsilon(1e-12));
    }
    for (int t = 2; t <= 200; ++t) CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
}

TEST_CASE("forward_diffuse branches") {
    const auto s = make_schedule(10, 0.05, 0.3);
    RngStream rng(1, 0);
    const LatentSignal x0{rng.gaussian_vec(32)};
    const LatentSignal zero{Vec::Zero(32)};
    const LatentSignal eps{rng.gaussian_vec(32)};

    const auto clean = forward_diffuse(x0, 4, zero, s);
    CHECK(clean.values.isApprox(std::sqrt(s.alpha_bar(4)) * x0.values, 1e-12));
    const auto pure = forward_diffuse(zero, 4, eps, s);
    CHECK(pure.values.isApprox(std::sqrt(1.0 - s.alpha_bar(4)) * eps.values, 1e-12));
    CHECK_THROWS(forward_diffuse(x0, 0, eps, s));
    CHECK_THROWS(forward_diffuse(x0, 11, eps, s));
}

TEST_CASE("forward marginal preserves unit power") {
    const auto s = make_schedule(50, 1e-3, 0.2);
    const Eigen::Index n = 100000;
    RngStream rng(2, 0);
    const LatentSignal x0 = normalize_power(LatentSignal{rng.gaussian_vec(n)}, 1.0);
    const LatentSignal eps{rng.gaussian_vec(n)};
    const auto xt = forward_diffuse(x0, 30, eps, s);
    CHECK(measure_power(xt) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("marginal-consistency of forward_diffuse moments") {
    const auto s = make_schedule(50, 1e-3, 0.2);
    const int t = 25;
    const Eigen::Index dim = 8;
    const int draws = 10000;
    Vec x0v(dim);
    RngStream rng(3, 0);
    for (Eigen::Index i = 0; i < dim; ++i) x0v[i] = rng.gaussian();
    const LatentSignal x0{x0v};

    Vec mean = Vec::Zero(dim);
    double var = 0.0;
    for (int d = 0; d < draws; ++d) {
        const LatentSignal eps{rng.gaussian_vec(dim)};
        const auto xt = forward_diffuse(x0, t, eps, s);
        mean += xt.values;
        var += (xt.values - std::sqrt(s.alpha_bar(t)) * x0v).squaredNorm();
    }
    mean /= draws;
    var /= draws * static_cast<double>(dim);
    CHECK((mean - std::sqrt(s.alpha_bar(t)) * x0v).cwiseAbs().maxCoeff() < 0.03);
    CHECK(var == doctest::Approx(1.0 - s.alpha_bar(t)).epsilon(0.03));
}

TEST_CASE("forward_snr values and monotonicity") {
    const auto s2 = make_schedule(2, 0.1, 0.2);
    CHECK(forward_snr(2, s2) == doctest::Approx(0.72 / 0.28).epsilon(1e-12));

    const auto s = make_schedule(200, 1e-4, 0.05);
    for (int t = 2; t <= 200; ++t) CHECK(forward_snr(t, s) < forward_snr(t - 1, s));
    CHECK_THROWS(forward_snr(0, s));
}

TEST_CASE("estimate_timestep endpoints and exact matches") {
    const auto s = make_schedule(200, 1e-4, 0.05);
    for (int t : {1, 7, 63, 200})
        CHECK(estimate_timestep(forward_snr(t, s), s) == t);
    CHECK(estimate_timestep(1e12, s) == 1);
    CHECK_THROWS(estimate_timestep(0.0, s));
    CHECK_THROWS(estimate_timestep(-1.0, s));
}

TEST_CASE("estimate_timestep agrees with the exhaustive oracle on 100 random SNRs") {
    const auto s = make_schedule(200, 1e-4, 0.05);
    RngStream rng(4, 0);
    for (int i = 0; i < 100; ++i) {
        const double snr = std::exp(-6.0 + 14.0 * rng.uniform());  // wide log-range
        // independent brute-force scan, larger-t tie-break
        int best = 1;
        double best_d = std::abs(std::log(forward_snr(1, s)) - std::log(snr));
        for (int t = 2; t <= s.T; ++t) {
            const double d = std::abs(std::log(forward_snr(t, s)) - std::log(snr));
            if (d <= best_d) {
                best_d = d;
                best = t;
            }
        }
        CHECK(estimate_timestep(snr, s) == best);
    }
}

TEST_CASE("estimate_timestep is monotone non-increasing in SNR") {
    const auto s = make_schedule(200, 1e-4, 0.05);
    int prev = s.T + 1;
    for (double logsnr = -6.0; logsnr <= 8.0; logsnr += 0.05) {
        const int t = estimate_timestep(std::exp(logsnr), s);
        CHECK(t <= prev);
        prev = t;
    }
}

TEST_CASE("denoise with t_start=0 is the identity") {
    const auto s = make_schedule(20, 1e-3, 0.1);
    auto m = DenoiserModel::init(16, s, 5);
    RngStream rng(5, 1);
    const LatentSignal x{rng.gaussian_vec(16)};
    const auto out = denoise(x, 0, m);
    CHECK(out.values == x.values);
    CHECK_THROWS(denoise(x, 21, m));
    CHECK_THROWS(denoise(x, -1, m));
}

TEST_CASE("deterministic denoise is reproducible") {
    const auto s = make_schedule(20, 1e-3, 0.1);
    auto m = DenoiserModel::init(16, s, 6);
    RngStream rng(6, 1);
    const LatentSignal x{rng.gaussian_vec(16)};
    const auto a = denoise(x, 15, m);
    const auto b = denoise(x, 15, m);
    CHECK(a.values == b.values);
}

TEST_CASE("denoiser training: oracle baseline, improvement, reproducibility") {
    const auto sch = make_schedule(50, 1e-3, 0.15);
    const Mat latents = cluster_latents(16, 512, 7);

    TrainConfig cfg;
    cfg.epochs = 0;
    cfg.seed = 7;
    TrainOutcome out0;
    auto untrained = train_denoiser(latents, sch, cfg, &out0);
    RngStream vrng(7, 99);
    const double loss0 = denoiser_validation_loss(untrained, latents, vrng);
    // the trivial zero predictor scores E||eps||^2/dim = 1; a random net is worse
    CHECK(loss0 > 1.0);

    cfg.epochs = 60;
    cfg.batch_size = 64;
    TrainOutcome out1;
    auto trained = train_denoiser(latents, sch, cfg, &out1);
    CHECK(out1.converged);
    CHECK(out1.final_loss < 1.0);  // training must beat the zero predictor

    auto trained2 = train_denoiser(latents, sch, cfg);
    CHECK(trained.net.flatten() == trained2.net.flatten());

    // measured improvement: denoising moves samples toward x0
    RngStream rng(7, 5);
    double mse_noisy = 0.0, mse_denoised = 0.0;
    const int t = 20;
    const double ab = sch.alpha_bar(t);
    const int trials = 500;
    Mat x0(16, trials), xt(16, trials);
    for (int i = 0; i < trials; ++i) {
        x0.col(i) = latents.col(i % latents.cols());
        xt.col(i) = std::sqrt(ab) * x0.col(i) + std::sqrt(1.0 - ab) * rng.gaussian_vec(16);
    }
    const Mat xhat = denoise_batch(xt, t, trained);
    mse_noisy = (xt - x0).array().square().mean();
    mse_denoised = (xhat - x0).array().square().mean();
    CHECK(mse_denoised < mse_noisy);
}

TEST_CASE("receive_and_denoise noiseless path stays close to the input") {
    const auto sch = make_schedule(50, 1e-3, 0.15);
    const Mat latents = cluster_latents(16, 256, 8);
    TrainConfig cfg;
    cfg.epochs = 40;
    cfg.batch_size = 64;
    cfg.seed = 8;
    const auto m = train_denoiser(latents, sch, cfg);

    const LatentSignal x{Vec(latents.col(3))};
    const auto out = receive_and_denoise(x, 1e9, m);
    CHECK((out.values - x.values).norm() / x.values.norm() < 0.2);
}
