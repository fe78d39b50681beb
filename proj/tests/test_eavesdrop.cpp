#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "semshield/eavesdrop.hpp"

using namespace semshield;

namespace {

// class-conditioned Gaussian clusters standing in for codec latents
struct ClusterData {
    Mat signals;
    std::vector<int> labels;
};

ClusterData make_clusters(Eigen::Index dim, Eigen::Index n, double spread, std::uint64_t seed) {
    RngStream rng(seed, 0);
    const Mat prototypes = 2.0 * rng.gaussian_mat(dim, kNumClasses);
    ClusterData d;
    d.signals.resize(dim, n);
    d.labels.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const int lab = static_cast<int>(i % kNumClasses);
        d.signals.col(i) = prototypes.col(lab) + spread * rng.gaussian_vec(dim);
        d.labels[static_cast<std::size_t>(i)] = lab;
    }
    return d;
}

const ClusterData& train_clusters() {
    static ClusterData d = make_clusters(16, 2000, 0.5, 31);
    return d;
}

const EveClassifier& trained_eve() {
    static EveClassifier c = [] {
        TrainConfig cfg;
        cfg.epochs = 15;
        cfg.seed = 31;
        return train_attribute_classifier(train_clusters().signals, train_clusters().labels, cfg);
    }();
    return c;
}

// classifier rigged to be perfect on one-hot inputs: logits = 100 * z
EveClassifier perfect_onehot_classifier() {
    auto c = EveClassifier::init(kNumClasses, 1, kNumClasses);
    c.net.weights()[0] = Mat::Identity(kNumClasses, kNumClasses);
    c.net.biases()[0].setZero();
    c.net.weights()[1] = 100.0 * Mat::Identity(kNumClasses, kNumClasses);
    c.net.biases()[1].setZero();
    return c;
}

}  // namespace

TEST_CASE("probabilities are a valid distribution") {
    const auto c = EveClassifier::init(8, 3);
    RngStream rng(1, 0);
    const Mat p = c.probabilities(rng.gaussian_mat(8, 12));
    CHECK(p.minCoeff() >= 0.0);
    for (Eigen::Index j = 0; j < p.cols(); ++j)
        CHECK(p.col(j).sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_THROWS(c.logits(Mat::Ones(5, 2)));
}

TEST_CASE("attribute classifier learns separable clusters") {
    const auto& d = train_clusters();
    const auto& c = trained_eve();
    const auto eval = make_clusters(16, 2000, 0.5, 31);  // same distribution
    CHECK(eve_accuracy(c, eval.signals, eval.labels) > 0.85);
    CHECK(eve_accuracy(c, d.signals, d.labels) > 0.85);
}

TEST_CASE("training is reproducible and rejects bad input") {
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.seed = 5;
    const auto& d = train_clusters();
    const auto a = train_attribute_classifier(d.signals, d.labels, cfg);
    const auto b = train_attribute_classifier(d.signals, d.labels, cfg);
    CHECK(a.net.flatten() == b.net.flatten());
    CHECK_THROWS(train_attribute_classifier(d.signals, std::vector<int>(3, 0), cfg));
    CHECK_THROWS(train_attribute_classifier(Mat(16, 0), {}, cfg));
}

TEST_CASE("accuracy on label-independent inputs is chance level") {
    const auto& c = trained_eve();
    RngStream rng(2, 0);
    const Eigen::Index n = 5000;
    const Mat noise = rng.gaussian_mat(16, n);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
        labels[static_cast<std::size_t>(i)] = static_cast<int>(rng.uniform_int(kNumClasses));
    const double acc = eve_accuracy(c, noise, labels);
    CHECK(acc > 0.07);
    CHECK(acc < 0.13);
}

TEST_CASE("label entropy oracle") {
    std::vector<int> uniform;
    for (int i = 0; i < 1000; ++i) uniform.push_back(i % 10);
    CHECK(empirical_label_entropy(uniform) == doctest::Approx(std::log(10.0)).epsilon(1e-12));
    CHECK(empirical_label_entropy(std::vector<int>(50, 3)) == doctest::Approx(0.0));
}

TEST_CASE("privacy MI is bounded in [0, ln 10]") {
    const auto& c = trained_eve();
    const auto& d = train_clusters();
    const double mi = privacy_leakage_mi(c, d.signals, d.labels);
    CHECK(mi >= 0.0);
    CHECK(mi <= std::log(10.0));
    CHECK(mi > 1.0);  // the clusters are highly informative
}

TEST_CASE("perfect classifier attains MI = ln 10 on one-hot signals") {
    const auto c = perfect_onehot_classifier();
    const Eigen::Index n = 1000;
    Mat onehot = Mat::Zero(kNumClasses, n);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const int lab = static_cast<int>(i % kNumClasses);
        onehot(lab, i) = 1.0;
        labels[static_cast<std::size_t>(i)] = lab;
    }
    CHECK(eve_accuracy(c, onehot, labels) == doctest::Approx(1.0));
    CHECK(privacy_leakage_mi(c, onehot, labels) == doctest::Approx(std::log(10.0)).epsilon(1e-6));
}

TEST_CASE("MI on label-independent noise clamps to near zero") {
    const auto& c = trained_eve();
    RngStream rng(3, 0);
    const Eigen::Index n = 4000;
    const Mat noise = rng.gaussian_mat(16, n);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
        labels[static_cast<std::size_t>(i)] = static_cast<int>(rng.uniform_int(kNumClasses));
    CHECK(privacy_leakage_mi(c, noise, labels) < 0.1);
}

TEST_CASE("MI and accuracy decay monotonically with additive noise power") {
    const auto& c = trained_eve();
    RngStream rng(4, 0);
    const auto eval = make_clusters(16, 3000, 0.5, 31);
    double prev_mi = 1e9, prev_acc = 1e9;
    for (double p : {0.0, 1.0, 4.0, 16.0, 64.0}) {
        const Mat noisy = eval.signals + std::sqrt(p) * rng.gaussian_mat(16, eval.signals.cols());
        const double mi = privacy_leakage_mi(c, noisy, eval.labels);
        const double acc = eve_accuracy(c, noisy, eval.labels);
        CHECK(mi <= prev_mi + 0.05);
        CHECK(acc <= prev_acc + 0.05);
        prev_mi = mi;
        prev_acc = acc;
    }
    CHECK(prev_mi < 0.3);  // drowned-out signal leaks almost nothing
}

TEST_CASE("model inversion is just the public decoder") {
    const auto codec = CodecModel::init(64, 256, 2);
    RngStream rng(5, 0);
    const LatentSignal z{rng.gaussian_vec(64)};
    const Vec inv = model_inversion_attack(z, codec);
    CHECK(inv == codec.decode(z));
    const Mat zb = rng.gaussian_mat(64, 6);
    CHECK(model_inversion_attack_batch(zb, codec) == codec.decode_batch(zb));
}
