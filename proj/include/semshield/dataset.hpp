#pragma once

// 28x28 grayscale 10-class image data: an IDX-format loader for a local copy
// of an MNIST-style benchmark set, plus a deterministic procedural generator
// used when no local dataset directory is given.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "semshield/core.hpp"

namespace semshield {

inline constexpr int kImageSide = 28;
inline constexpr int kImagePixels = kImageSide * kImageSide;
inline constexpr int kNumClasses = 10;

struct ImageSample {
    Vec pixels;  // length 784, values in [0,1]
    int label = 0;

    ImageSample() = default;
    ImageSample(Vec p, int lab) : pixels(std::move(p)), label(lab) {
        if (pixels.size() != kImagePixels)
            throw std::invalid_argument("ImageSample: expected 28x28 pixels");
        if (pixels.minCoeff() < 0.0 || pixels.maxCoeff() > 1.0)
            throw std::invalid_argument("ImageSample: pixel out of [0,1]");
        if (label < 0 || label >= kNumClasses)
            throw std::invalid_argument("ImageSample: label out of range");
    }
};

struct Dataset {
    Mat images;               // 784 x N, each column one image
    std::vector<int> labels;  // length N

    Eigen::Index size() const { return images.cols(); }

    ImageSample sample(Eigen::Index i) const { return ImageSample(images.col(i), labels[static_cast<std::size_t>(i)]); }

    Vec mean_image() const { return images.rowwise().mean(); }

    // Mean per-pixel variance; the MSE of the best constant predictor.
    double pixel_variance() const {
        const Vec mu = mean_image();
        return (images.colwise() - mu).array().square().mean();
    }
};

namespace detail {

inline void draw_pixel(Vec& img, int r, int c, double v) {
    if (r >= 0 && r < kImageSide && c >= 0 && c < kImageSide) {
        const int idx = r * kImageSide + c;
        img[idx] = std::max(img[idx], v);
    }
}

}  // namespace detail

// One procedurally generated sample of the given class: parametric shapes
// with jittered position, size and intensity so each class forms a manifold
// rather than a single template.
inline Vec synthetic_image(int label, RngStream& rng) {
    Vec img = Vec::Zero(kImagePixels);
    const double cx = 13.5 + 4.0 * (rng.uniform() - 0.5) * 2.0;
    const double cy = 13.5 + 4.0 * (rng.uniform() - 0.5) * 2.0;
    const double amp = 0.6 + 0.4 * rng.uniform();
    const double size = 5.0 + 4.0 * rng.uniform();
    const int period = 4 + static_cast<int>(rng.uniform() * 4.0);
    const int phase = static_cast<int>(rng.uniform() * period);

    for (int r = 0; r < kImageSide; ++r) {
        for (int c = 0; c < kImageSide; ++c) {
            const double dy = r - cy, dx = c - cx;
            const double rad = std::sqrt(dx * dx + dy * dy);
            double v = 0.0;
            switch (label) {
                case 0:  // filled disk
                    if (rad <= size) v = amp;
                    break;
                case 1:  // ring
                    if (std::abs(rad - size) <= 1.8) v = amp;
                    break;
                case 2:  // horizontal stripes
                    if ((r + phase) % period < period / 2) v = amp;
                    break;
                case 3:  // vertical stripes
                    if ((c + phase) % period < period / 2) v = amp;
                    break;
                case 4:  // diagonal band
                    if (std::abs(dx + dy) <= size * 0.6) v = amp;
                    break;
                case 5:  // filled square
                    if (std::abs(dx) <= size && std::abs(dy) <= size) v = amp;
                    break;
                case 6:  // square frame
                    if (std::max(std::abs(dx), std::abs(dy)) <= size &&
                        std::max(std::abs(dx), std::abs(dy)) >= size - 2.2)
                        v = amp;
                    break;
                case 7:  // plus cross
                    if ((std::abs(dx) <= 1.8 && std::abs(dy) <= size) ||
                        (std::abs(dy) <= 1.8 && std::abs(dx) <= size))
                        v = amp;
                    break;
                case 8:  // X cross
                    if ((std::abs(dx - dy) <= 2.2 || std::abs(dx + dy) <= 2.2) && rad <= size + 2.0)
                        v = amp;
                    break;
                case 9:  // checkerboard
                    if (((r + phase) / (period / 2 + 1) + (c + phase) / (period / 2 + 1)) % 2 == 0)
                        v = amp;
                    break;
                default:
                    throw std::invalid_argument("synthetic_image: bad label");
            }
            img[r * kImageSide + c] = v;
        }
    }
    // mild pixel noise keeps the autoencoder from memorizing binary masks
    for (int i = 0; i < kImagePixels; ++i)
        img[i] = std::clamp(img[i] + 0.02 * rng.gaussian(), 0.0, 1.0);
    return img;
}

inline Dataset make_synthetic_dataset(Eigen::Index n, std::uint64_t seed) {
    RngStream rng(seed, /*stream*/ 0xDA7A);
    Dataset ds;
    ds.images.resize(kImagePixels, n);
    ds.labels.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const int label = static_cast<int>(i % kNumClasses);
        ds.images.col(i) = synthetic_image(label, rng);
        ds.labels[static_cast<std::size_t>(i)] = label;
    }
    return ds;
}

namespace detail {

inline std::uint32_t read_be32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

}  // namespace detail

// Reads an MNIST/Fashion-MNIST style IDX pair (images + labels).
inline Dataset load_idx_dataset(const std::filesystem::path& images_file,
                                const std::filesystem::path& labels_file,
                                Eigen::Index max_count = -1) {
    std::ifstream fi(images_file, std::ios::binary);
    std::ifstream fl(labels_file, std::ios::binary);
    if (!fi) throw std::runtime_error("cannot open " + images_file.string());
    if (!fl) throw std::runtime_error("cannot open " + labels_file.string());
    if (detail::read_be32(fi) != 0x00000803) throw std::runtime_error("bad IDX image magic");
    if (detail::read_be32(fl) != 0x00000801) throw std::runtime_error("bad IDX label magic");
    const auto n_img = static_cast<Eigen::Index>(detail::read_be32(fi));
    const auto rows = detail::read_be32(fi), cols = detail::read_be32(fi);
    const auto n_lab = static_cast<Eigen::Index>(detail::read_be32(fl));
    if (rows != kImageSide || cols != kImageSide) throw std::runtime_error("IDX images are not 28x28");
    if (n_img != n_lab) throw std::runtime_error("IDX image/label count mismatch");
    const Eigen::Index n = (max_count > 0) ? std::min(max_count, n_img) : n_img;

    Dataset ds;
    ds.images.resize(kImagePixels, n);
    ds.labels.resize(static_cast<std::size_t>(n));
    std::vector<unsigned char> buf(kImagePixels);
    for (Eigen::Index i = 0; i < n; ++i) {
        fi.read(reinterpret_cast<char*>(buf.data()), kImagePixels);
        for (int p = 0; p < kImagePixels; ++p)
            ds.images(p, i) = static_cast<double>(buf[static_cast<std::size_t>(p)]) / 255.0;
        char lab = 0;
        fl.read(&lab, 1);
        ds.labels[static_cast<std::size_t>(i)] = static_cast<int>(static_cast<unsigned char>(lab));
    }
    if (!fi || !fl) throw std::runtime_error("truncated IDX file");
    return ds;
}

// Dataset resolution used by the harness: a directory containing
// train-images-idx3-ubyte / train-labels-idx1-ubyte is loaded; an empty path
// selects the procedural generator.
inline Dataset load_dataset(const std::string& dir, Eigen::Index n, std::uint64_t seed, bool train_split) {
    if (dir.empty()) {
        // disjoint seeds for train/eval splits
        return make_synthetic_dataset(n, seed + (train_split ? 0u : 0x5EEDu));
    }
    namespace fs = std::filesystem;
    const std::string prefix = train_split ? "train" : "t10k";
    return load_idx_dataset(fs::path(dir) / (prefix + "-images-idx3-ubyte"),
                            fs::path(dir) / (prefix + "-labels-idx1-ubyte"), n);
}

}  // namespace semshield
