#pragma once

// Minimal dense-network toolkit: MLP forward/backward, Adam, and the loss
// functions used by the codec, the denoiser and Eve's classifier. Batches
// are column-major (features x batch).

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "semshield/core.hpp"

namespace semshield::nn {

enum class Act : std::uint32_t { None = 0, Relu = 1, Sigmoid = 2 };

inline Mat apply_act(const Mat& z, Act a) {
    switch (a) {
        case Act::None: return z;
        case Act::Relu: return z.cwiseMax(0.0);
        case Act::Sigmoid: return (1.0 + (-z.array()).exp()).inverse().matrix();
    }
    throw std::logic_error("apply_act: bad tag");
}

// Derivative expressed through the activation output y.
inline Mat act_grad_from_output(const Mat& y, Act a) {
    switch (a) {
        case Act::None: return Mat::Ones(y.rows(), y.cols());
        case Act::Relu: return (y.array() > 0.0).cast<double>().matrix();
        case Act::Sigmoid: return (y.array() * (1.0 - y.array())).matrix();
    }
    throw std::logic_error("act_grad_from_output: bad tag");
}

struct LayerSpec {
    Eigen::Index in = 0, out = 0;
    Act act = Act::None;
};

struct Grads {
    std::vector<Mat> gW;
    std::vector<Vec> gb;
};

// Per-call activation cache; keeps trained models const-shareable while
// training and input-gradient paths carry their own state.
struct Cache {
    std::vector<Mat> x;  // x[0] = input, x[i+1] = output of layer i
};

class Mlp {
public:
    Mlp() = default;

    Mlp(const std::vector<LayerSpec>& specs, RngStream& rng) : specs_(specs) {
        W_.reserve(specs.size());
        b_.reserve(specs.size());
        for (const auto& s : specs) {
            // He-style fan-in scaling
            const double scale = std::sqrt(2.0 / static_cast<double>(s.in));
            W_.push_back(rng.gaussian_mat(s.out, s.in) * scale);
            b_.push_back(Vec::Zero(s.out));
        }
    }

    const std::vector<LayerSpec>& specs() const { return specs_; }
    std::size_t num_layers() const { return W_.size(); }

    Mat forward(const Mat& X, Cache* cache = nullptr) const {
        Mat y = X;
        if (cache) {
            cache->x.clear();
            cache->x.push_back(y);
        }
        for (std::size_t i = 0; i < W_.size(); ++i) {
            y = apply_act((W_[i] * y).colwise() + b_[i], specs_[i].act);
            if (cache) cache->x.push_back(y);
        }
        return y;
    }

    // Back-propagates dLoss/dOutput; returns dLoss/dInput. Parameter
    // gradients are accumulated into *grads when supplied.
    Mat backward(const Mat& dY, const Cache& cache, Grads* grads) const {
        if (cache.x.size() != W_.size() + 1)
            throw std::logic_error("Mlp::backward: stale cache");
        if (grads && grads->gW.empty()) {
            for (std::size_t i = 0; i < W_.size(); ++i) {
                grads->gW.emplace_back(Mat::Zero(W_[i].rows(), W_[i].cols()));
                grads->gb.emplace_back(Vec::Zero(b_[i].size()));
            }
        }
        Mat d = dY;
        for (std::size_t ii = W_.size(); ii-- > 0;) {
            const Mat dpre = d.cwiseProduct(act_grad_from_output(cache.x[ii + 1], specs_[ii].act));
            if (grads) {
                grads->gW[ii] += dpre * cache.x[ii].transpose();
                grads->gb[ii] += dpre.rowwise().sum();
            }
            d = W_[ii].transpose() * dpre;
        }
        return d;
    }

    std::vector<Mat>& weights() { return W_; }
    std::vector<Vec>& biases() { return b_; }
    const std::vector<Mat>& weights() const { return W_; }
    const std::vector<Vec>& biases() const { return b_; }

    std::vector<double> flatten() const {
        std::vector<double> out;
        for (std::size_t i = 0; i < W_.size(); ++i) {
            out.insert(out.end(), W_[i].data(), W_[i].data() + W_[i].size());
            out.insert(out.end(), b_[i].data(), b_[i].data() + b_[i].size());
        }
        return out;
    }

    void unflatten(const std::vector<double>& flat) {
        std::size_t pos = 0;
        for (std::size_t i = 0; i < W_.size(); ++i) {
            if (pos + static_cast<std::size_t>(W_[i].size() + b_[i].size()) > flat.size())
                throw std::invalid_argument("Mlp::unflatten: parameter count mismatch");
            std::copy(flat.data() + pos, flat.data() + pos + W_[i].size(), W_[i].data());
            pos += static_cast<std::size_t>(W_[i].size());
            std::copy(flat.data() + pos, flat.data() + pos + b_[i].size(), b_[i].data());
            pos += static_cast<std::size_t>(b_[i].size());
        }
        if (pos != flat.size())
            throw std::invalid_argument("Mlp::unflatten: parameter count mismatch");
    }

private:
    std::vector<LayerSpec> specs_;
    std::vector<Mat> W_;
    std::vector<Vec> b_;
};

class Adam {
public:
    explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(Mlp& net, const Grads& grads) {
        if (mW_.empty()) {
            for (std::size_t i = 0; i < net.num_layers(); ++i) {
                mW_.emplace_back(Mat::Zero(net.weights()[i].rows(), net.weights()[i].cols()));
                vW_.emplace_back(Mat::Zero(net.weights()[i].rows(), net.weights()[i].cols()));
                mb_.emplace_back(Vec::Zero(net.biases()[i].size()));
                vb_.emplace_back(Vec::Zero(net.biases()[i].size()));
            }
        }
        ++t_;
        const double c1 = 1.0 - std::pow(beta1_, t_);
        const double c2 = 1.0 - std::pow(beta2_, t_);
        for (std::size_t i = 0; i < net.num_layers(); ++i) {
            mW_[i] = beta1_ * mW_[i] + (1.0 - beta1_) * grads.gW[i];
            vW_[i] = beta2_ * vW_[i].array().matrix() + (1.0 - beta2_) * grads.gW[i].cwiseProduct(grads.gW[i]);
            mb_[i] = beta1_ * mb_[i] + (1.0 - beta1_) * grads.gb[i];
            vb_[i] = beta2_ * vb_[i] + (1.0 - beta2_) * grads.gb[i].cwiseProduct(grads.gb[i]);
            net.weights()[i].array() -=
                lr_ * (mW_[i].array() / c1) / ((vW_[i].array() / c2).sqrt() + eps_);
            net.biases()[i].array() -=
                lr_ * (mb_[i].array() / c1) / ((vb_[i].array() / c2).sqrt() + eps_);
        }
    }

private:
    double lr_, beta1_, beta2_, eps_;
    int t_ = 0;
    std::vector<Mat> mW_, vW_;
    std::vector<Vec> mb_, vb_;
};

// Column-wise softmax of logits.
inline Mat softmax(const Mat& logits) {
    Mat p(logits.rows(), logits.cols());
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
        const Vec col = logits.col(c);
        const double mx = col.maxCoeff();
        Vec e = (col.array() - mx).exp();
        p.col(c) = e / e.sum();
    }
    return p;
}

// Mean cross-entropy (nats) of softmax(logits) against integer labels, and
// its gradient w.r.t. logits (already divided by batch size).
inline double softmax_ce(const Mat& logits, const std::vector<int>& labels, Mat* dlogits = nullptr) {
    const auto batch = static_cast<std::size_t>(logits.cols());
    if (labels.size() != batch) throw std::invalid_argument("softmax_ce: label count mismatch");
    const Mat p = softmax(logits);
    double ce = 0.0;
    for (std::size_t c = 0; c < batch; ++c)
        ce -= std::log(std::max(p(labels[c], static_cast<Eigen::Index>(c)), 1e-300));
    ce /= static_cast<double>(batch);
    if (dlogits) {
        *dlogits = p;
        for (std::size_t c = 0; c < batch; ++c)
            (*dlogits)(labels[c], static_cast<Eigen::Index>(c)) -= 1.0;
        *dlogits /= static_cast<double>(batch);
    }
    return ce;
}

}  // namespace semshield::nn
