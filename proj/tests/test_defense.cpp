#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "semshield/defense.hpp"
#include "semshield/shield.hpp"

using namespace semshield;

namespace {

constexpr Eigen::Index kDim = 64;

LatentSignal unit_signal(RngStream& rng) {
    return normalize_power(LatentSignal{rng.gaussian_vec(kDim)}, 1.0);
}

// y = s + channel noise + jamming
LatentSignal received(const JammerProfile& p, double noise_power, RngStream& rng) {
    const auto s = unit_signal(rng);
    const auto jam = gen_jamming(p, kDim, rng);
    return LatentSignal(s.values + std::sqrt(noise_power) * rng.gaussian_vec(kDim) + jam.values);
}

}  // namespace

TEST_CASE("estimate_jsr oracles") {
    RngStream rng(1, 0);
    // clean unit-power signal: interference estimate clamps at the floor
    const auto s = unit_signal(rng);
    CHECK(estimate_jsr(s, 0.0) == doctest::Approx(-60.0));

    // arithmetic example: total power 1.2, noise 0.1 -> interference 0.1
    Vec v = Vec::Ones(kDim) * std::sqrt(1.2);
    CHECK(estimate_jsr(LatentSignal{v}, 0.1) == doctest::Approx(linear_to_db(0.1)).epsilon(1e-9));
    CHECK_THROWS(estimate_jsr(s, -0.5));
}

TEST_CASE("estimate_jsr recovers a 40 dB jammer within 0.5 dB") {
    JammerProfile p;
    p.kind = JamKind::noise;
    p.jsr_db = 40.0;
    RngStream rng(2, 0);
    const Eigen::Index n = 1 << 14;
    const LatentSignal s = normalize_power(LatentSignal{rng.gaussian_vec(n)}, 1.0);
    const auto jamv = gen_jamming(p, n, rng);
    const LatentSignal y{Vec(s.values + 0.3 * rng.gaussian_vec(n) + jamv.values)};
    CHECK(std::abs(estimate_jsr(y, 0.09) - 40.0) < 0.5);
}

TEST_CASE("feature extraction matches the per-kind signatures") {
    const double np = 0.1;
    JammerProfile p;
    p.jsr_db = 40.0;

    p.kind = JamKind::cw;
    RngStream r1(3, 0);
    const auto fcw = extract_features(received(p, np, r1), np);
    CHECK(fcw.dominant_bin_fraction >= 0.9);
    CHECK(fcw.estimated_jsr_db > 30.0);

    p.kind = JamKind::noise;
    RngStream r2(3, 1);
    const auto fn = extract_features(received(p, np, r2), np);
    CHECK(fn.spectral_flatness >= 0.8);
    CHECK(std::abs(fn.fourth_order_cumulant) < 1.5);

    p.kind = JamKind::pulse;
    RngStream r3(3, 2);
    const auto fp = extract_features(received(p, np, r3), np);
    CHECK(fp.papr >= 3.0);

    RngStream r4(3, 3);
    CHECK_THROWS(extract_features(LatentSignal{r4.gaussian_vec(32)}, np));
}

TEST_CASE("identification routes power regimes correctly") {
    const double np = 0.1;
    // no jamming at all -> low-power branch
    RngStream r0(4, 0);
    auto id = identify_jamming(LatentSignal{Vec(unit_signal(r0).values +
                                                std::sqrt(np) * r0.gaussian_vec(kDim))},
                               np);
    CHECK(id.branch == JamBranch::low_power);

    // -10 dB adversarial-scale interference -> still low power
    RngStream r1(4, 1);
    JammerProfile weak;
    weak.kind = JamKind::noise;
    weak.jsr_db = -10.0;
    id = identify_jamming(received(weak, np, r1), np);
    CHECK(id.branch == JamBranch::low_power);
    CHECK(id.kind == JamKind::adversarial);

    // 40 dB jamming -> high power
    JammerProfile strong;
    strong.kind = JamKind::pulse;
    strong.jsr_db = 40.0;
    RngStream r2(4, 2);
    id = identify_jamming(received(strong, np, r2), np);
    CHECK(id.branch == JamBranch::high_power);
    CHECK(id.kind == JamKind::pulse);
}

TEST_CASE("identification accuracy across kinds and JSR levels") {
    const double np = 0.1;
    int correct = 0, total = 0;
    for (auto kind : {JamKind::pulse, JamKind::cw, JamKind::noise, JamKind::sweep}) {
        for (double jsr_db : {20.0, 30.0, 40.0}) {
            for (int trial = 0; trial < 25; ++trial) {
                JammerProfile p;
                p.kind = kind;
                p.jsr_db = jsr_db;
                RngStream rng(100 + static_cast<std::uint64_t>(trial),
                              static_cast<std::uint64_t>(jsr_db) * 8 + static_cast<std::uint64_t>(kind));
                const auto id = identify_jamming(received(p, np, rng), np);
                ++total;
                if (id.branch == JamBranch::high_power && id.kind == kind) ++correct;
            }
        }
    }
    CHECK(static_cast<double>(correct) / total >= 0.95);
}

TEST_CASE("coarse cancellation suppresses pulse jamming by >= 20 dB") {
    const double np = 0.1;
    JammerProfile p;
    p.kind = JamKind::pulse;
    p.jsr_db = 40.0;
    double resid_sum = 0.0;
    const int trials = 200;
    for (int trial = 0; trial < trials; ++trial) {
        RngStream rng(200 + static_cast<std::uint64_t>(trial), 0);
        const auto s = unit_signal(rng);
        const Vec noise = std::sqrt(np) * rng.gaussian_vec(kDim);
        const auto jam = gen_jamming(p, kDim, rng);
        const LatentSignal y{Vec(s.values + noise + jam.values)};
        const auto out = coarse_cancel(y, JamKind::pulse, np);
        resid_sum += measure_power(LatentSignal{Vec(out.values - s.values - noise)});
    }
    // 40 dB in, at most 20 dB mean residual interference out
    CHECK(resid_sum / trials <= db_to_linear(20.0));
}

TEST_CASE("coarse cancellation suppresses cw jamming by >= 30 dB") {
    const double np = 0.1;
    JammerProfile p;
    p.kind = JamKind::cw;
    p.jsr_db = 40.0;
    double resid_sum = 0.0;
    const int trials = 200;
    for (int trial = 0; trial < trials; ++trial) {
        RngStream rng(300 + static_cast<std::uint64_t>(trial), 0);
        const auto s = unit_signal(rng);
        const Vec noise = std::sqrt(np) * rng.gaussian_vec(kDim);
        const auto jam = gen_jamming(p, kDim, rng);
        const LatentSignal y{Vec(s.values + noise + jam.values)};
        const auto out = coarse_cancel(y, JamKind::cw, np);
        resid_sum += measure_power(LatentSignal{Vec(out.values - s.values - noise)});
    }
    CHECK(resid_sum / trials <= db_to_linear(10.0));
}

TEST_CASE("coarse cancellation never amplifies noise/sweep interference") {
    const double np = 0.1;
    for (auto kind : {JamKind::noise, JamKind::sweep}) {
        double resid_sum = 0.0, in_sum = 0.0;
        const int trials = 100;
        for (int trial = 0; trial < trials; ++trial) {
            JammerProfile p;
            p.kind = kind;
            p.jsr_db = 40.0;
            RngStream rng(400 + static_cast<std::uint64_t>(trial), static_cast<std::uint64_t>(kind));
            const auto s = unit_signal(rng);
            const Vec noise = std::sqrt(np) * rng.gaussian_vec(kDim);
            const auto jam = gen_jamming(p, kDim, rng);
            const LatentSignal y{Vec(s.values + noise + jam.values)};
            const auto out = coarse_cancel(y, kind, np);
            resid_sum += measure_power(LatentSignal{Vec(out.values - s.values - noise)});
            in_sum += measure_power(jam);
        }
        CHECK(resid_sum < 0.5 * in_sum);  // substantial suppression on average
    }
    RngStream rng(5, 0);
    CHECK_THROWS(coarse_cancel(unit_signal(rng), JamKind::adversarial, np));
}

TEST_CASE("genie cancellation is exact") {
    RngStream rng(6, 0);
    const auto s = unit_signal(rng);
    JammerProfile p;
    p.kind = JamKind::sweep;
    p.jsr_db = 40.0;
    const auto jam = gen_jamming(p, kDim, rng);
    const LatentSignal y{Vec(s.values + jam.values)};
    const auto out = coarse_cancel_genie(y, jam);
    CHECK(out.values.isApprox(s.values, 1e-9));
    CHECK_THROWS(coarse_cancel_genie(y, LatentSignal{Vec::Ones(8)}));
}

TEST_CASE("defend on a nearly clean link routes low-power and stays close") {
    const auto sch = make_schedule(200, 1e-4, 0.05);
    const auto m = DenoiserModel::init(kDim, sch, 7);
    RngStream rng(7, 0);
    const auto s = unit_signal(rng);
    const auto r = defend_detailed(s, 1e-9, m);
    CHECK(r.id.branch == JamBranch::low_power);
    CHECK(r.timestep <= 2);
    CHECK((r.output.values - s.values).norm() / s.values.norm() < 0.1);
}

TEST_CASE("defend cancels high-power jamming before denoising") {
    const auto sch = make_schedule(200, 1e-4, 0.05);
    const auto m = DenoiserModel::init(kDim, sch, 8);
    const double np = 0.1;
    JammerProfile p;
    p.kind = JamKind::pulse;
    p.jsr_db = 40.0;
    RngStream rng(8, 0);
    const auto y = received(p, np, rng);
    const auto r = defend_detailed(y, np, m);
    CHECK(r.id.branch == JamBranch::high_power);
    CHECK(r.id.kind == JamKind::pulse);
    // cancellation brings the jamming-dominated power back near clean levels
    CHECK(measure_power(r.output) < 0.01 * measure_power(y));
    CHECK(r.residual_sinr_linear > 0.0);
    CHECK(r.timestep >= 1);
}
