#pragma once

// Signal containers, power accounting, dB conversion, AWGN channel and
// seeded randomness shared by every other module.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace semshield {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kNoiselessSnrDb = std::numeric_limits<double>::infinity();

struct DegenerateInputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Deterministic random stream. Identical (seed, stream_id) pairs reproduce
// identical draw sequences on every platform: mt19937_64 is fully specified
// and the Gaussian sampler below avoids std::normal_distribution, whose
// output is implementation-defined.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : seed_(seed), stream_id_(stream_id) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed),
                          static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream_id),
                          static_cast<std::uint32_t>(stream_id >> 32)};
        engine_.seed(seq);
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    double uniform() {  // [0, 1)
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Box-Muller; the spare value is cached so consecutive calls are cheap.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 == 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    Vec gaussian_vec(Eigen::Index n) {
        Vec v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = gaussian();
        return v;
    }

    // Column-major fill, matching Eigen's default storage order.
    Mat gaussian_mat(Eigen::Index rows, Eigen::Index cols) {
        Mat m(rows, cols);
        for (Eigen::Index c = 0; c < cols; ++c)
            for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = gaussian();
        return m;
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n) {
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Real vector emitted by the semantic transmitter; the object that traverses
// the channel. Unit-power convention: the transmitter output has mean-square
// power 1.
struct LatentSignal {
    Vec values;

    LatentSignal() = default;
    explicit LatentSignal(Vec v) : values(std::move(v)) {
        if (values.size() < 1)
            throw DegenerateInputError("LatentSignal: dim must be >= 1");
        if (!values.allFinite())
            throw DegenerateInputError("LatentSignal: non-finite element");
    }

    Eigen::Index dim() const { return values.size(); }
};

struct ChannelSpec {
    double snr_db = 10.0;  // legitimate-link SNR
    std::uint64_t seed = 0;
};

// Mean-square power (1/dim) * sum(values^2).
inline double measure_power(const LatentSignal& s) {
    return s.values.squaredNorm() / static_cast<double>(s.dim());
}

inline double measure_power(const Vec& v) {
    return v.squaredNorm() / static_cast<double>(v.size());
}

// Scale s so that measure_power(result) == target_power; result is parallel
// to s.
inline LatentSignal normalize_power(const LatentSignal& s, double target_power) {
    const double p = measure_power(s);
    if (p <= 0.0)
        throw DegenerateInputError("normalize_power: zero-power input");
    if (target_power <= 0.0)
        throw DegenerateInputError("normalize_power: target power must be > 0");
    return LatentSignal(s.values * std::sqrt(target_power / p));
}

inline double db_to_linear(double x_db) { return std::pow(10.0, x_db / 10.0); }

inline double linear_to_db(double x) {
    if (x <= 0.0)
        throw DegenerateInputError("linear_to_db: input must be > 0");
    return 10.0 * std::log10(x);
}

// AWGN channel: adds i.i.d. zero-mean Gaussian noise with per-dimension
// variance measure_power(s) / db_to_linear(snr_db). snr_db = +inf is the
// noiseless sentinel.
inline LatentSignal awgn(const LatentSignal& s, double snr_db, RngStream& rng) {
    const double p = measure_power(s);
    if (p <= 0.0) throw DegenerateInputError("awgn: zero-power input");
    if (std::isinf(snr_db) && snr_db > 0) return s;
    const double sigma = std::sqrt(p / db_to_linear(snr_db));
    return LatentSignal(s.values + sigma * rng.gaussian_vec(s.dim()));
}

// Batched variant on a dim x batch matrix of unit-power columns.
inline Mat awgn_batch(const Mat& z, double snr_db, RngStream& rng) {
    if (std::isinf(snr_db) && snr_db > 0) return z;
    const double sigma = std::sqrt(1.0 / db_to_linear(snr_db));
    return z + sigma * rng.gaussian_mat(z.rows(), z.cols());
}

}  // namespace semshield
