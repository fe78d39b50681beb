#pragma once

// Eve's attack suite (model inversion, attribute inference) and the privacy
// metrics reported for the eavesdropping case study.

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "semshield/codec.hpp"
#include "semshield/core.hpp"
#include "semshield/nn.hpp"

namespace semshield {

struct EveChannelSpec {
    double snr_db = 10.0;  // Alice -> Eve link
    std::uint64_t seed = 0;
};

struct EveClassifier {
    nn::Mlp net;  // latent_dim -> hidden -> 10 logits
    Eigen::Index input_dim = 64;
    Eigen::Index hidden_dim = 128;
    std::uint64_t train_seed = 0;

    static EveClassifier init(Eigen::Index input_dim, std::uint64_t seed,
                              Eigen::Index hidden_dim = 128) {
        EveClassifier c;
        c.input_dim = input_dim;
        c.hidden_dim = hidden_dim;
        c.train_seed = seed;
        RngStream rng(seed, /*stream*/ 0xE5E);
        c.net = nn::Mlp({{input_dim, hidden_dim, nn::Act::Relu},
                         {hidden_dim, kNumClasses, nn::Act::None}},
                        rng);
        return c;
    }

    Mat logits(const Mat& signals) const {
        if (signals.rows() != input_dim)
            throw std::invalid_argument("EveClassifier: input dimension mismatch");
        return net.forward(signals);
    }

    // Probability vectors (columns sum to 1).
    Mat probabilities(const Mat& signals) const { return nn::softmax(logits(signals)); }
};

// Eve runs the intercepted signal through the publicly released decoder.
inline Vec model_inversion_attack(const LatentSignal& z_eve, const CodecModel& public_codec) {
    return public_codec.decode(z_eve);
}

inline Mat model_inversion_attack_batch(const Mat& z_eve, const CodecModel& public_codec) {
    return public_codec.decode_batch(z_eve);
}

// Trains Eve's attribute classifier on the latents as she observes them.
// Strong-adversary convention: the training set excludes AN (Eve knows the
// public models and trains before AN deployment), so a later accuracy drop
// is attributable to the defense.
inline EveClassifier train_attribute_classifier(const Mat& latents, const std::vector<int>& labels,
                                                const TrainConfig& cfg,
                                                TrainOutcome* outcome = nullptr) {
    cfg.validate();
    if (latents.cols() == 0) throw std::invalid_argument("train_attribute_classifier: empty set");
    if (static_cast<std::size_t>(latents.cols()) != labels.size())
        throw std::invalid_argument("train_attribute_classifier: label count mismatch");

    EveClassifier c = EveClassifier::init(latents.rows(), cfg.seed);
    nn::Adam opt(cfg.learning_rate);
    RngStream rng(cfg.seed, /*stream*/ 0x7EE);

    const Eigen::Index n = latents.cols();
    const Eigen::Index bs = std::min<Eigen::Index>(cfg.batch_size, n);
    double last_ce = std::log(10.0);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double epoch_ce = 0.0;
        int steps = 0;
        for (Eigen::Index start = 0; start + bs <= n; start += bs) {
            Mat X(latents.rows(), bs);
            std::vector<int> y(static_cast<std::size_t>(bs));
            for (Eigen::Index j = 0; j < bs; ++j) {
                const Eigen::Index idx =
                    static_cast<Eigen::Index>(rng.uniform_int(static_cast<std::uint64_t>(n)));
                X.col(j) = latents.col(idx);
                y[static_cast<std::size_t>(j)] = labels[static_cast<std::size_t>(idx)];
            }
            nn::Cache cache;
            const Mat logits = c.net.forward(X, &cache);
            Mat dlogits;
            epoch_ce += nn::softmax_ce(logits, y, &dlogits);
            ++steps;
            nn::Grads g;
            c.net.backward(dlogits, cache, &g);
            opt.step(c.net, g);
        }
        if (steps > 0) last_ce = epoch_ce / steps;
    }
    if (outcome) {
        outcome->final_loss = last_ce;
        outcome->converged = cfg.epochs == 0 || last_ce < std::log(10.0);
    }
    return c;
}

inline double eve_accuracy(const EveClassifier& c, const Mat& signals, const std::vector<int>& labels) {
    if (signals.cols() == 0) throw std::invalid_argument("eve_accuracy: empty set");
    const Mat logits = c.logits(signals);
    Eigen::Index correct = 0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
        Eigen::Index argmax = 0;
        logits.col(j).maxCoeff(&argmax);
        if (static_cast<int>(argmax) == labels[static_cast<std::size_t>(j)]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(logits.cols());
}

inline double empirical_label_entropy(const std::vector<int>& labels) {
    std::map<int, double> counts;
    for (int l : labels) counts[l] += 1.0;
    double h = 0.0;
    const double n = static_cast<double>(labels.size());
    for (const auto& [l, cnt] : counts) {
        const double p = cnt / n;
        h -= p * std::log(p);
    }
    return h;
}

// Variational lower bound on the leakage I(S; Z_e): H(S) - CE, clamped at 0.
// Bounded above by ln 10 since CE >= 0 and H(S) <= ln 10.
inline double privacy_leakage_mi(const EveClassifier& c, const Mat& signals,
                                 const std::vector<int>& labels) {
    if (signals.cols() == 0) throw std::invalid_argument("privacy_leakage_mi: empty set");
    const double h = empirical_label_entropy(labels);
    const double ce = nn::softmax_ce(c.logits(signals), labels);
    return std::max(0.0, h - ce);
}

}  // namespace semshield
