#include <doctest.h>

#include <array>
#include <cmath>

#include "oracles.hpp"
#include "propcast/baselines.hpp"
#include "propcast/errors.hpp"

using namespace propcast;
using namespace propcast::baselines;

namespace {

std::array<TrajectoryPoint, 4> poses(std::array<double, 4> xs, std::array<double, 4> ys,
                                     std::array<Micros, 4> ts = {0, 33'333, 66'667, 100'000}) {
    std::array<TrajectoryPoint, 4> out;
    for (std::size_t i = 0; i < 4; ++i) out[i] = {ts[i], xs[i], ys[i]};
    return out;
}

std::vector<BoundingBoxObservation> noisy_line(std::size_t n, double vx, double vy, double sigma,
                                               std::uint64_t seed) {
    oracle::Gen g(seed);
    std::vector<BoundingBoxObservation> out;
    for (std::size_t k = 0; k < n; ++k) {
        const Micros t = std::llround(static_cast<double>(k) * 1e6 / 30);
        const double s = static_cast<double>(t) / 1e6;
        out.push_back({t, 0, 400 + vx * s + g.normal(sigma) - 20, 300 + vy * s + g.normal(sigma) - 15, 40, 30, false});
    }
    return out;
}

}  // namespace

TEST_CASE("linear: exact line gives last + (12, 0) at 0.4 s") {
    const Micros dt = 33'333;
    const auto p = poses({0, 30.0 * dt / 1e6, 60.0 * dt / 1e6, 90.0 * dt / 1e6}, {5, 5, 5, 5}, {0, dt, 2 * dt, 3 * dt});
    const auto f = linear_extrapolate(p, 0.4, 1.0 / 30);
    REQUIRE(f.size() == 12);
    CHECK(f.back().cx == doctest::Approx(p[3].cx + 12).epsilon(1e-12));
    CHECK(f.back().cy == 5.0);
    CHECK(f.back().t == p[3].t + 400'000);
}

TEST_CASE("linear: identical poses are stationary") {
    const auto f = linear_extrapolate(poses({3, 3, 3, 3}, {4, 4, 4, 4}), 0.8, 1.0 / 30);
    for (const auto& q : f) {
        CHECK(q.cx == 3.0);
        CHECK(q.cy == 4.0);
    }
}

TEST_CASE("linear: alternating jitter, hand-enumerated quotients") {
    // x: 0, 1, 0, 1 at 0.1 s spacing -> quotients 10, -10, 10 -> mean 10/3
    const auto v = mean_difference_velocity(poses({0, 1, 0, 1}, {0, -1, 0, -1}, {0, 100'000, 200'000, 300'000}));
    CHECK(v.vx == doctest::Approx(10.0 / 3.0));
    CHECK(v.vy == doctest::Approx(-10.0 / 3.0));
}

TEST_CASE("linear: mean quotient equals end-to-end slope only on uniform grids") {
    oracle::Gen g(6);
    for (int trial = 0; trial < 200; ++trial) {
        const Micros dt = g.integer(1000, 100'000);
        const auto p = poses({g.real(-50, 50), g.real(-50, 50), g.real(-50, 50), g.real(-50, 50)}, {0, 0, 0, 0},
                             {0, dt, 2 * dt, 3 * dt});
        const double slope = (p[3].cx - p[0].cx) / (static_cast<double>(3 * dt) / 1e6);
        CHECK(mean_difference_velocity(p).vx == doctest::Approx(slope).epsilon(1e-9));
    }
    const auto uneven = poses({0, 1, 5, 6}, {0, 0, 0, 0}, {0, 100'000, 150'000, 400'000});
    const double slope = 6.0 / 0.4;
    CHECK(std::abs(mean_difference_velocity(uneven).vx - slope) > 1.0);
}

TEST_CASE("linear: duplicate timestamps rejected") {
    CHECK_THROWS_AS(mean_difference_velocity(poses({0, 1, 2, 3}, {0, 0, 0, 0}, {0, 10, 10, 20})), ValidationError);
}

TEST_CASE("run_linear uses the shared emission frames") {
    const auto track = noisy_line(60, 30, 0, 0, 1);
    kalman::ForecasterConfig cfg;
    const auto lin = run_linear(track, cfg.forecast);
    const auto kf = vanilla_kalman(track, cfg);
    REQUIRE(lin.size() == kf.size());
    for (std::size_t i = 0; i < lin.size(); ++i) {
        CHECK(lin[i].t_emit == kf[i].t_emit);
        CHECK(lin[i].horizon_s == kf[i].horizon_s);
        REQUIRE(lin[i].poses.size() == kf[i].poses.size());
        for (std::size_t k = 0; k < lin[i].poses.size(); ++k) CHECK(lin[i].poses[k].t == kf[i].poses[k].t);
    }
}

TEST_CASE("vanilla equals the modulated filter with r = 0 and r_dot = 0, bit for bit") {
    const auto track = noisy_line(50, 40, -10, 3, 2);
    kalman::ForecasterConfig cfg;
    std::vector<rpm::RpmEstimate> low;
    for (const auto& b : track) low.push_back({b.t, 20.0, cfg.modulation.rpm_lo, 10, true, false});
    CHECK(vanilla_kalman(track, cfg) == kalman::run_forecaster(track, low, cfg));
}

TEST_CASE("vanilla and linear agree on a noiseless line after convergence") {
    const auto track = noisy_line(60, 45, 15, 0, 3);
    kalman::ForecasterConfig cfg;
    const auto lin = run_linear(track, cfg.forecast);
    const auto kf = vanilla_kalman(track, cfg);
    for (std::size_t i = 0; i < lin.size(); ++i) {
        if (lin[i].t_emit < track[10].t) continue;
        const auto& a = lin[i].poses.back();
        const auto& b = kf[i].poses.back();
        CHECK(std::hypot(a.cx - b.cx, a.cy - b.cy) < 0.1);
    }
}

TEST_CASE("under heavy measurement noise the filter's forecast scatter is below linear's") {
    kalman::ForecasterConfig cfg;
    std::vector<double> kf_err, lin_err;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto track = noisy_line(45, 60, 0, 6, 1000 + seed);
        const auto lin = run_linear(track, cfg.forecast);
        const auto kf = vanilla_kalman(track, cfg);
        // last emission at 0.4 s, x error against the true line
        for (std::size_t i = lin.size(); i-- > 0;) {
            if (lin[i].horizon_s != 0.4) continue;
            const double s = static_cast<double>(lin[i].poses.back().t) / 1e6;
            lin_err.push_back(lin[i].poses.back().cx - (400 + 60 * s));
            kf_err.push_back(kf[i].poses.back().cx - (400 + 60 * s));
            break;
        }
    }
    const auto variance = [](const std::vector<double>& v) {
        double m = 0, q = 0;
        for (double x : v) m += x;
        m /= static_cast<double>(v.size());
        for (double x : v) q += (x - m) * (x - m);
        return q / static_cast<double>(v.size() - 1);
    };
    REQUIRE(kf_err.size() == 100);
    CHECK(variance(kf_err) < variance(lin_err));
}
