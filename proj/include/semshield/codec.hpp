#pragma once

// Semantic transmitter (encoder) and semantic receiver (decoder) for the
// image reconstruction task. The encoder ends in a power-normalization layer
// so every channel input has mean-square power exactly 1; training is
// channel-aware (AWGN injected at a random SNR drawn per sample).

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "semshield/core.hpp"
#include "semshield/dataset.hpp"
#include "semshield/nn.hpp"

namespace semshield {

struct TrainConfig {
    int epochs = 20;
    int batch_size = 64;
    double learning_rate = 1e-3;
    double train_snr_lo_db = 5.0;
    double train_snr_hi_db = 20.0;
    std::uint64_t seed = 1;
    double convergence_threshold = 0.05;  // final-loss bound before a run is flagged

    void validate() const {
        if (epochs < 0 || batch_size <= 0 || learning_rate <= 0.0)
            throw std::invalid_argument("TrainConfig: epochs/batch/lr must be positive");
    }
};

struct TrainOutcome {
    double final_loss = 0.0;
    bool converged = false;
};

// Unit-power normalization of each column: z = sqrt(dim) * h / ||h||.
inline Mat normalize_columns(const Mat& h) {
    const double sd = std::sqrt(static_cast<double>(h.rows()));
    Mat z(h.rows(), h.cols());
    for (Eigen::Index c = 0; c < h.cols(); ++c) {
        const double n = h.col(c).norm();
        if (n <= 0.0) throw DegenerateInputError("normalize_columns: zero pre-activation");
        z.col(c) = h.col(c) * (sd / n);
    }
    return z;
}

// Gradient of the normalization layer: dh = c * (dz - z (z.dz)/dim),
// c = sqrt(dim)/||h||.
inline Mat normalize_columns_backward(const Mat& dz, const Mat& h, const Mat& z) {
    const double d = static_cast<double>(h.rows());
    const double sd = std::sqrt(d);
    Mat dh(h.rows(), h.cols());
    for (Eigen::Index c = 0; c < h.cols(); ++c) {
        const double cc = sd / h.col(c).norm();
        const double zd = z.col(c).dot(dz.col(c));
        dh.col(c) = cc * (dz.col(c) - z.col(c) * (zd / d));
    }
    return dh;
}

struct CodecModel {
    nn::Mlp encoder;  // 784 -> hidden -> latent_dim (pre-normalization)
    nn::Mlp decoder;  // latent_dim -> hidden -> 784, sigmoid output
    Eigen::Index latent_dim = 64;
    Eigen::Index hidden_dim = 256;
    std::uint64_t train_seed = 0;

    static CodecModel init(Eigen::Index latent_dim, Eigen::Index hidden_dim, std::uint64_t seed) {
        CodecModel m;
        m.latent_dim = latent_dim;
        m.hidden_dim = hidden_dim;
        m.train_seed = seed;
        RngStream rng(seed, /*stream*/ 0xC0DEC);
        m.encoder = nn::Mlp({{kImagePixels, hidden_dim, nn::Act::Relu},
                             {hidden_dim, latent_dim, nn::Act::None}},
                            rng);
        m.decoder = nn::Mlp({{latent_dim, hidden_dim, nn::Act::Relu},
                             {hidden_dim, kImagePixels, nn::Act::Sigmoid}},
                            rng);
        return m;
    }

    // dim x batch of unit-power latents.
    Mat encode_batch(const Mat& images) const {
        if (images.rows() != kImagePixels)
            throw std::invalid_argument("encode: expected 784-pixel columns");
        return normalize_columns(encoder.forward(images));
    }

    Mat decode_batch(const Mat& z) const {
        if (z.rows() != latent_dim)
            throw std::invalid_argument("decode: latent dimension mismatch");
        return decoder.forward(z);
    }

    LatentSignal encode(const ImageSample& img) const {
        return LatentSignal(encode_batch(img.pixels));
    }

    Vec decode(const LatentSignal& z) const { return decode_batch(z.values); }
};

// Mean per-pixel squared error of the decode(channel(encode(x))) round trip.
// channel transforms the latent batch; pass the identity for a clean link.
inline double communication_mse(const CodecModel& m, const Mat& images,
                                const std::function<Mat(const Mat&)>& channel) {
    if (images.cols() == 0) throw std::invalid_argument("communication_mse: empty image set");
    const Mat rec = m.decode_batch(channel(m.encode_batch(images)));
    return (rec - images).array().square().mean();
}

inline CodecModel train_codec(const Dataset& dataset, const TrainConfig& cfg,
                              TrainOutcome* outcome = nullptr) {
    cfg.validate();
    if (dataset.size() == 0) throw std::invalid_argument("train_codec: empty dataset");

    CodecModel m = CodecModel::init(64, 256, cfg.seed);
    nn::Adam opt_enc(cfg.learning_rate), opt_dec(cfg.learning_rate);
    RngStream rng(cfg.seed, /*stream*/ 0x7124);

    const Eigen::Index n = dataset.size();
    const Eigen::Index bs = std::min<Eigen::Index>(cfg.batch_size, n);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

    double last_loss = 1.0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates with the deterministic stream
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.uniform_int(i)]);
        double epoch_loss = 0.0;
        int steps = 0;
        for (Eigen::Index start = 0; start + bs <= n; start += bs) {
            Mat X(kImagePixels, bs);
            for (Eigen::Index j = 0; j < bs; ++j)
                X.col(j) = dataset.images.col(order[static_cast<std::size_t>(start + j)]);

            nn::Cache enc_cache, dec_cache;
            const Mat h = m.encoder.forward(X, &enc_cache);
            const Mat z = normalize_columns(h);

            // per-sample channel noise at a random training SNR
            Mat zn = z;
            for (Eigen::Index j = 0; j < bs; ++j) {
                const double snr_db = cfg.train_snr_lo_db +
                                      (cfg.train_snr_hi_db - cfg.train_snr_lo_db) * rng.uniform();
                const double sigma = std::sqrt(1.0 / db_to_linear(snr_db));
                zn.col(j) += sigma * rng.gaussian_vec(z.rows());
            }

            const Mat rec = m.decoder.forward(zn, &dec_cache);
            const Mat err = rec - X;
            epoch_loss += err.array().square().mean();
            ++steps;

            const Mat drec = err * (2.0 / static_cast<double>(err.size()));
            nn::Grads g_dec, g_enc;
            const Mat dzn = m.decoder.backward(drec, dec_cache, &g_dec);
            const Mat dh = normalize_columns_backward(dzn, h, z);  // noise add is identity in grad
            m.encoder.backward(dh, enc_cache, &g_enc);
            opt_dec.step(m.decoder, g_dec);
            opt_enc.step(m.encoder, g_enc);
        }
        if (steps > 0) last_loss = epoch_loss / steps;
    }
    if (outcome) {
        outcome->final_loss = last_loss;
        outcome->converged = cfg.epochs == 0 || last_loss < cfg.convergence_threshold;
    }
    return m;
}

}  // namespace semshield
