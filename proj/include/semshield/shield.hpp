#pragma once

// AN generation module: Gaussian and adversarial artificial-noise design plus
// power allocation over the security / reliability / covertness metrics.
// Grid search stands in for the RL allocator: the action space is a single
// scalar, so exhaustive evaluation is exact.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "semshield/core.hpp"
#include "semshield/eavesdrop.hpp"
#include "semshield/jammer.hpp"

namespace semshield {

// i.i.d. zero-mean Gaussian AN with per-dimension variance = power.
inline LatentSignal gen_gaussian_an(Eigen::Index dim, double power, RngStream& rng) {
    if (power < 0.0) throw std::invalid_argument("gen_gaussian_an: negative power");
    if (power == 0.0) return LatentSignal(Vec::Zero(dim));
    return LatentSignal(std::sqrt(power) * rng.gaussian_vec(dim));
}

inline Mat gen_gaussian_an_batch(Eigen::Index dim, Eigen::Index batch, double power, RngStream& rng) {
    if (power < 0.0) throw std::invalid_argument("gen_gaussian_an: negative power");
    if (power == 0.0) return Mat::Zero(dim, batch);
    return std::sqrt(power) * rng.gaussian_mat(dim, batch);
}

// Eve's classification loss at the true labels, differentiable in the
// channel input; the objective for adversarial AN.
struct EveLossPipeline final : DifferentiablePipeline {
    const EveClassifier* eve = nullptr;
    std::vector<int> labels;

    EveLossPipeline(const EveClassifier& e, std::vector<int> labs)
        : eve(&e), labels(std::move(labs)) {}

    double loss_and_grad(const Mat& z_in, Mat* dz) const override {
        nn::Cache cache;
        const Mat logits = eve->net.forward(z_in, &cache);
        Mat dlogits;
        const double ce = nn::softmax_ce(logits, labels, &dlogits);
        if (dz) *dz = eve->net.backward(dlogits, cache, nullptr);
        return ce;
    }
};

// pgd-style perturbation maximizing Eve's loss, power-projected exactly.
inline Mat gen_adversarial_an_batch(const EveClassifier& eve, const Mat& z,
                                    const std::vector<int>& labels, double power,
                                    std::uint64_t seed = 0, bool* zero_grad_warning = nullptr) {
    if (power < 0.0) throw std::invalid_argument("gen_adversarial_an: negative power");
    if (power == 0.0) return Mat::Zero(z.rows(), z.cols());
    JammerProfile p;
    p.kind = JamKind::adversarial;
    p.method = AdvMethod::pgd;
    p.jsr_db = linear_to_db(power);
    p.seed = seed;
    const EveLossPipeline pipeline(eve, labels);
    const AdversarialResult r = gen_adversarial_batch(pipeline, z, p);
    if (zero_grad_warning) *zero_grad_warning = r.zero_grad_warning;
    return r.delta;
}

inline LatentSignal gen_adversarial_an(const EveClassifier& eve, const LatentSignal& z, int label,
                                       double power, std::uint64_t seed = 0) {
    return LatentSignal(gen_adversarial_an_batch(eve, z.values, {label}, power, seed));
}

// Mean squared per-dimension difference between the transmitter output
// before and after AN injection; the covertness proxy.
inline double perceptibility_mse(const LatentSignal& z_clean, const LatentSignal& z_an) {
    if (z_clean.dim() != z_an.dim())
        throw std::invalid_argument("perceptibility_mse: dimension mismatch");
    return (z_an.values - z_clean.values).squaredNorm() / static_cast<double>(z_clean.dim());
}

inline double perceptibility_mse_batch(const Mat& z_clean, const Mat& z_an) {
    if (z_clean.rows() != z_an.rows() || z_clean.cols() != z_an.cols())
        throw std::invalid_argument("perceptibility_mse: dimension mismatch");
    return (z_an - z_clean).array().square().mean();
}

struct AllocationWeights {
    double w_security = 1.0 / 3.0;
    double w_reliability = 1.0 / 3.0;
    double w_covertness = 1.0 / 3.0;

    void validate() const {
        if (w_security < 0.0 || w_reliability < 0.0 || w_covertness < 0.0)
            throw std::invalid_argument("AllocationWeights: negative weight");
        if (std::abs(w_security + w_reliability + w_covertness - 1.0) > 1e-9)
            throw std::invalid_argument("AllocationWeights: weights must sum to 1");
    }
};

struct AllocationGridRow {
    double an_power = 0.0;
    double security_mi = 0.0;
    double reliability_mse = 0.0;
    double covertness_mse = 0.0;
    double objective = 0.0;
};

struct AllocationResult {
    double an_power = 0.0;
    double security_mi = 0.0;
    double reliability_mse = 0.0;
    double covertness_mse = 0.0;
    double objective = 0.0;
    std::vector<AllocationGridRow> grid;
};

// evaluator: power -> (privacy MI, communication MSE, perceptibility MSE).
using AllocationEvaluator = std::function<std::array<double, 3>(double)>;

// Exhaustive grid search minimizing the weighted sum of the min-max
// normalized metrics (all three are lower-is-better); ties break toward
// smaller power.
inline AllocationResult allocate_power(const std::vector<double>& grid,
                                       const AllocationEvaluator& evaluator,
                                       const AllocationWeights& w) {
    if (grid.empty()) throw std::invalid_argument("allocate_power: empty grid");
    w.validate();
    for (double p : grid)
        if (p < 0.0) throw std::invalid_argument("allocate_power: negative grid power");

    AllocationResult res;
    res.grid.reserve(grid.size());
    for (double p : grid) {
        const auto [mi, comm, percept] = evaluator(p);
        res.grid.push_back({p, mi, comm, percept, 0.0});
    }

    auto norm = [&](auto get) {
        double lo = res.grid.front().*get, hi = lo;
        for (const auto& r : res.grid) {
            lo = std::min(lo, r.*get);
            hi = std::max(hi, r.*get);
        }
        std::vector<double> out(res.grid.size());
        for (std::size_t i = 0; i < res.grid.size(); ++i)
            out[i] = (hi > lo) ? (res.grid[i].*get - lo) / (hi - lo) : 0.0;
        return out;
    };
    const auto n_mi = norm(&AllocationGridRow::security_mi);
    const auto n_comm = norm(&AllocationGridRow::reliability_mse);
    const auto n_cov = norm(&AllocationGridRow::covertness_mse);

    std::size_t best = 0;
    for (std::size_t i = 0; i < res.grid.size(); ++i) {
        res.grid[i].objective =
            w.w_security * n_mi[i] + w.w_reliability * n_comm[i] + w.w_covertness * n_cov[i];
        const bool better = res.grid[i].objective < res.grid[best].objective ||
                            (res.grid[i].objective == res.grid[best].objective &&
                             res.grid[i].an_power < res.grid[best].an_power);
        if (i > 0 && better) best = i;
    }
    res.an_power = res.grid[best].an_power;
    res.security_mi = res.grid[best].security_mi;
    res.reliability_mse = res.grid[best].reliability_mse;
    res.covertness_mse = res.grid[best].covertness_mse;
    res.objective = res.grid[best].objective;
    return res;
}

inline std::vector<double> default_allocation_grid() {
    // 20 log-spaced powers in [1e-3, 0.5]
    std::vector<double> g(20);
    const double lo = std::log(1e-3), hi = std::log(0.5);
    for (int i = 0; i < 20; ++i) g[static_cast<std::size_t>(i)] = std::exp(lo + (hi - lo) * i / 19.0);
    return g;
}

}  // namespace semshield
