#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "oracles.hpp"
#include "propcast/errors.hpp"
#include "propcast/kalman.hpp"

using namespace propcast;
using namespace propcast::kalman;

namespace {

FilterState state_of(double cx, double cy, double vx, double vy, Mat4 P = Mat4::Identity()) {
    FilterState s;
    s.x << cx, cy, vx, vy;
    s.P = P;
    return s;
}

std::vector<BoundingBoxObservation> line_track(std::size_t n, double x0, double y0, double vx, double vy,
                                               double fps = 30.0) {
    std::vector<BoundingBoxObservation> out;
    for (std::size_t k = 0; k < n; ++k) {
        const Micros t = std::llround(static_cast<double>(k) * 1e6 / fps);
        const double s = static_cast<double>(t) / 1e6;
        out.push_back({t, 0, x0 + vx * s - 20, y0 + vy * s - 15, 40, 30, false});
    }
    return out;
}

Mat4 random_spd(oracle::Gen& g) {
    Mat4 A;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) A(i, j) = g.real(-3, 3);
    }
    return A * A.transpose() + 0.1 * Mat4::Identity();
}

}  // namespace

TEST_CASE("normalize_rpm") {
    CHECK(normalize_rpm(2300, 2300, 30000) == 0.0);
    CHECK(normalize_rpm(30000, 2300, 30000) == 1.0);
    CHECK(normalize_rpm(16150, 2300, 30000) == doctest::Approx(0.5));
    CHECK(normalize_rpm(100, 2300, 30000) == 0.0);
    CHECK(normalize_rpm(1e6, 2300, 30000) == 1.0);
    CHECK_THROWS_AS(normalize_rpm(5000, 3000, 3000), ValidationError);
    ModulationConfig bad;
    bad.rpm_lo = 5000;
    bad.rpm_hi = 4000;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("compute_r_dot") {
    CHECK(compute_r_dot(0.3, 0.3, 0.1) == 0.0);
    CHECK(compute_r_dot(0.5, 0.3, 0.1, 2.0) == 1.0);
    CHECK(compute_r_dot(0.3, 0.35, 0.1, 2.0) == doctest::Approx(-0.25));
    CHECK(compute_r_dot(0.0, 1.0, 0.01, 2.0) == -1.0);
    CHECK_THROWS_AS(compute_r_dot(0.1, 0.1, 0.0), ValidationError);
}

TEST_CASE("compute_alpha_v: examples, oracle grid, floor inactive") {
    CHECK(compute_alpha_v(0, 0) == 1.0);
    CHECK(compute_alpha_v(1, 1) == 4.0);
    CHECK(compute_alpha_v(0.5, -1) == 2.0);
    CHECK(compute_alpha_v(0.3, -0.5) == compute_alpha_v(0.3, 0.0));
    for (int i = 0; i <= 20; ++i) {
        for (int j = 0; j <= 20; ++j) {
            const double r = i / 20.0;
            const double rd = -1.0 + j / 10.0;
            const double a = compute_alpha_v(r, rd);
            CHECK(a == oracle::alpha_v(r, rd));
            CHECK(1.0 + 2.0 * r + std::max(0.0, rd) >= 1.0);  // the 0.5 floor never binds
        }
    }
    CHECK_THROWS_AS(compute_alpha_v(-0.1, 0), ValidationError);
    CHECK_THROWS_AS(compute_alpha_v(1.1, 0), ValidationError);
    CHECK_THROWS_AS(compute_alpha_v(0.5, 1.5), ValidationError);
}

TEST_CASE("modulator: invalid samples hold r, neutral start") {
    RpmModulator m;
    CHECK(m.current().r == 0.5);
    CHECK(m.current().alpha_v == 2.0);
    rpm::RpmEstimate invalid;
    invalid.t = 10;
    CHECK(m.push(invalid).alpha_v == 2.0);

    rpm::RpmEstimate a{100'000, 0, 2300, 10, true, false};
    CHECK(m.push(a).r == 0.0);
    CHECK(m.current().r_dot == 0.0);  // first valid sample has no rate
    CHECK(m.current().alpha_v == 1.0);

    rpm::RpmEstimate b{200'000, 0, 2300 + 0.1 * 27700, 10, true, false};
    const auto& mb = m.push(b);
    CHECK(mb.r == doctest::Approx(0.1));
    CHECK(mb.r_dot == doctest::Approx(0.5));  // 0.1 over 0.1 s at scale 2
    CHECK(mb.alpha_v == doctest::Approx(1.7));

    invalid.t = 300'000;
    const auto& mc = m.push(invalid);
    CHECK(mc.r == doctest::Approx(0.1));
    CHECK(mc.r_dot == 0.0);
}

TEST_CASE("kf_predict: transition arithmetic and Q scaling") {
    const auto s = state_of(100, 100, 10, -5);
    NoiseConfig cfg;
    const auto p = kf_predict(s, 0.1, 3.0, cfg);
    CHECK(p.x(0) == doctest::Approx(101));
    CHECK(p.x(1) == doctest::Approx(99.5));
    CHECK(p.x(2) == 10);
    CHECK(p.x(3) == -5);
    CHECK(p.t == 100'000);

    const auto p1 = kf_predict(s, 0.1, 1.0, cfg);
    const auto p2 = kf_predict(s, 0.1, 2.0, cfg);
    const double base = s.P(2, 2);
    CHECK((p2.P(2, 2) - base) == doctest::Approx(2.0 * (p1.P(2, 2) - base)).epsilon(1e-14));

    const auto tiny = kf_predict(s, 1e-6, 1.0, cfg);
    CHECK(std::abs(tiny.x(0) - 100) <= 10 * 1e-6 + 1e-12);
    CHECK_THROWS_AS(kf_predict(s, 0.0, 1.0, cfg), ValidationError);
    CHECK_THROWS_AS(kf_predict(s, -0.1, 1.0, cfg), ValidationError);
}

TEST_CASE("kf_predict: velocity-only scope leaves position noise unscaled") {
    NoiseConfig cfg;
    cfg.scale_scope = ScaleScope::VelocityOnly;
    const Mat4 Q = cfg.process_noise(3.0, 0.5);
    CHECK(Q(0, 0) == 0.5);
    CHECK(Q(2, 2) == 15.0);
    cfg.scale_scope = ScaleScope::Full;
    CHECK(cfg.process_noise(3.0, 0.5)(0, 0) == 1.5);
}

TEST_CASE("kf_update: zero innovation, tiny R, validation") {
    NoiseConfig cfg;
    const auto s = state_of(5, 6, 7, 8, Mat4::Identity() * 4);
    const Measurement same{0, 5, 6, 7, 8, 1.0 / 30};
    const auto u = kf_update(s, same, cfg);
    CHECK(u.x == s.x);

    NoiseConfig sharp;
    sharp.r_pos = 1e-12;
    const Measurement m{0, 50, 60, 1, 2, 1.0};
    const auto v = kf_update(s, m, sharp);
    CHECK(std::abs(v.x(0) - 50) < 1e-6);
    CHECK(std::abs(v.x(1) - 60) < 1e-6);
    CHECK(std::abs(v.x(2) - 1) < 1e-6);

    Measurement nan = m;
    nan.cx = std::nan("");
    CHECK_THROWS_AS(kf_update(s, nan, cfg), ValidationError);
    FilterState later = s;
    later.t = 10;
    CHECK_THROWS_AS(kf_update(later, m, cfg), ValidationError);
}

TEST_CASE("kf_update: 1D reduction matches K = P / (P + R)") {
    oracle::Gen g(8);
    for (int trial = 0; trial < 1000; ++trial) {
        const double p = g.real(0.01, 100), pv = g.real(0.01, 100);
        NoiseConfig cfg;
        cfg.r_pos = g.real(0.01, 50);
        const double baseline = g.real(0.01, 1);
        Mat4 P = Mat4::Zero();
        P.diagonal() << p, p, pv, pv;
        const auto s = state_of(g.real(-100, 100), g.real(-100, 100), g.real(-50, 50), g.real(-50, 50), P);
        const Measurement m{0, g.real(-100, 100), g.real(-100, 100), g.real(-50, 50), g.real(-50, 50), baseline};
        const auto u = kf_update(s, m, cfg);

        const double r = cfg.r_pos, rv = 2 * r / (baseline * baseline);
        const double k = p / (p + r), kv = pv / (pv + rv);
        CHECK(std::abs(u.x(0) - (s.x(0) + k * (m.cx - s.x(0)))) <= 1e-12 * std::max(1.0, std::abs(u.x(0))));
        CHECK(std::abs(u.x(2) - (s.x(2) + kv * (m.vx - s.x(2)))) <= 1e-12 * std::max(1.0, std::abs(u.x(2))));
        CHECK(std::abs(u.P(0, 0) - (1 - k) * p) <= 1e-12 * std::max(1.0, p));
        CHECK(std::abs(u.P(2, 2) - (1 - kv) * pv) <= 1e-12 * std::max(1.0, pv));
        CHECK(u.P(0, 2) == doctest::Approx(0.0));
    }
}

TEST_CASE("covariance stays symmetric and PSD over 10,000 random cycles") {
    oracle::Gen g(404);
    NoiseConfig cfg;
    FilterState s = state_of(0, 0, 0, 0, random_spd(g));
    double worst_asym = 0, worst_eig = 0;
    for (int i = 0; i < 10'000; ++i) {
        cfg.r_pos = g.real(1e-3, 10);
        s = kf_predict(s, g.real(1e-4, 0.5), g.real(0.5, 4), cfg);
        const Measurement m{s.t, g.real(-500, 500), g.real(-500, 500), g.real(-100, 100), g.real(-100, 100), g.real(0.01, 0.2)};
        s = kf_update(s, m, cfg);
        worst_asym = std::max(worst_asym, (s.P - s.P.transpose()).cwiseAbs().maxCoeff());
        Eigen::SelfAdjointEigenSolver<Mat4> es(s.P);
        worst_eig = std::min(worst_eig, es.eigenvalues().minCoeff());
    }
    CHECK(worst_asym <= 1e-9);
    CHECK(worst_eig >= -1e-9);
}

TEST_CASE("measurement_from_boxes") {
    BoundingBoxObservation prev{0, 0, 600, 300, 80, 60, false};
    BoundingBoxObservation curr{33'333, 0, 603, 300, 80, 60, false};
    auto m = measurement_from_boxes(curr, prev);
    CHECK(m.cx == 643);
    CHECK(m.cy == 330);
    CHECK(m.vx == doctest::Approx(90.0009).epsilon(1e-6));
    CHECK(m.vy == 0.0);
    CHECK(measurement_from_boxes(prev, BoundingBoxObservation{-10, 0, 600, 300, 80, 60, false}).vx == 0.0);
    curr.t = 66'666;
    CHECK(measurement_from_boxes(curr, prev).vx == doctest::Approx(45.00045).epsilon(1e-6));
    CHECK_THROWS_AS(measurement_from_boxes(prev, curr), ValidationError);
    curr.track_id = 1;
    CHECK_THROWS_AS(measurement_from_boxes(curr, prev), ValidationError);
}

TEST_CASE("forecast grid") {
    CHECK(forecast_offsets(0.4, 1.0 / 30).size() == 12);
    CHECK(forecast_offsets(0.8, 1.0 / 30).size() == 24);
    const auto odd = forecast_offsets(0.1, 0.03);
    REQUIRE(odd.size() == 4);
    CHECK(odd.back() == 0.1);
    CHECK(odd[2] == doctest::Approx(0.09));
    CHECK_THROWS_AS(forecast_offsets(0, 0.1), ValidationError);
}

TEST_CASE("forecast: constant velocity line, zero velocity, input untouched") {
    NoiseConfig cfg;
    const auto s = state_of(0, 0, 30, 0);
    const auto f = forecast(s, 0.4, 1.0 / 30, 1.0, cfg);
    REQUIRE(f.poses.size() == 12);
    CHECK(f.poses.back().cx == doctest::Approx(12.0).epsilon(1e-12));
    CHECK(f.poses.back().cy == 0.0);
    CHECK(f.poses.back().t == 400'000);
    for (std::size_t k = 0; k < f.poses.size(); ++k) {
        CHECK(f.poses[k].cx == doctest::Approx(30.0 * static_cast<double>(k + 1) / 30).epsilon(1e-12));
        CHECK(f.poses[k].t == std::llround(static_cast<double>(k + 1) * 1e6 / 30));
    }
    CHECK(s.x(0) == 0.0);
    const auto still = forecast(state_of(7, 9, 0, 0), 0.8, 1.0 / 30, 1.0, cfg);
    for (const auto& p : still.poses) {
        CHECK(p.cx == 7.0);
        CHECK(p.cy == 9.0);
    }
}

TEST_CASE("forecast: one long predict equals twelve short ones") {
    NoiseConfig cfg;
    const auto s = state_of(3, -4, 17.5, -8.25);
    const auto f = forecast(s, 0.4, 1.0 / 30, 2.0, cfg);
    const auto once = kf_predict(s, 0.4, 2.0, cfg);
    CHECK(std::abs(f.final_state.x(0) - once.x(0)) < 1e-9);
    CHECK(std::abs(f.final_state.x(1) - once.x(1)) < 1e-9);
}

TEST_CASE("forecast: mean independent of alpha_v for any covariance") {
    oracle::Gen g(12);
    NoiseConfig cfg;
    for (int trial = 0; trial < 100; ++trial) {
        const auto s = state_of(g.real(0, 1000), g.real(0, 700), g.real(-200, 200), g.real(-200, 200), random_spd(g));
        const auto a = forecast(s, 0.8, 1.0 / 30, 1.0, cfg);
        const auto b = forecast(s, 0.8, 1.0 / 30, 3.7, cfg);
        CHECK(a.poses == b.poses);
        CHECK(b.covariance_trace.back() > a.covariance_trace.back());
    }
}

// Trace growth needs non-negative position/velocity cross terms, which is
// what the filter produces from a diagonal start.
TEST_CASE("forecast: trace non-decreasing in horizon for filter states") {
    oracle::Gen g(12);
    NoiseConfig cfg;
    for (int trial = 0; trial < 100; ++trial) {
        Mat4 P = Mat4::Zero();
        P.diagonal() << g.real(0.1, 20), g.real(0.1, 20), g.real(0.1, 200), g.real(0.1, 200);
        auto s = state_of(g.real(0, 1000), g.real(0, 700), g.real(-200, 200), g.real(-200, 200), P);
        for (int k = 0, n = static_cast<int>(g.integer(0, 20)); k < n; ++k) {
            s = kf_predict(s, 1.0 / 30, g.real(1, 4), cfg);
            s = kf_update(s, {s.t, g.real(0, 1000), g.real(0, 700), g.real(-200, 200), g.real(-200, 200), 1.0 / 30}, cfg);
        }
        const auto a = forecast(s, 0.8, 1.0 / 30, 1.0, cfg);
        const auto b = forecast(s, 0.8, 1.0 / 30, 3.7, cfg);
        CHECK(a.poses == b.poses);
        for (std::size_t k = 1; k < a.covariance_trace.size(); ++k) {
            CHECK(a.covariance_trace[k] >= a.covariance_trace[k - 1]);
        }
        CHECK(b.covariance_trace.back() > a.covariance_trace.back());
    }
}

TEST_CASE("run_forecaster: emission frames and timestamps") {
    const auto track = line_track(60, 100, 360, 30, 0);
    ForecasterConfig cfg;
    const auto idx = emission_indices(track, cfg.forecast);
    REQUIRE_FALSE(idx.empty());
    CHECK(idx.front() == kMinHistory - 1);
    CHECK(track[idx.back()].t + 800'000 <= track.back().t + 16'667);
    CHECK(idx.back() == 35);  // 59 - 24
    const auto em = run_forecaster(track, {}, cfg);
    CHECK(em.size() == idx.size() * 2);
    CHECK(em[0].t_emit == track[3].t);
    CHECK(em[0].horizon_s == 0.4);
    CHECK(em[1].horizon_s == 0.8);
    CHECK(em[1].poses.size() == 24);
    CHECK_THROWS_AS(run_forecaster(std::span(track).first(1), {}, cfg), ValidationError);
    CHECK(emission_indices(std::span(track).first(3), cfg.forecast).empty());
}

TEST_CASE("run_forecaster: noiseless constant velocity, FDE below 0.1 px after 5 updates") {
    const auto track = line_track(60, 100, 360, 30, -12);
    ForecasterConfig cfg;
    const auto em = run_forecaster(track, {}, cfg);
    for (const auto& e : em) {
        if (e.horizon_s != 0.4 || e.t_emit < track[6].t) continue;
        const auto& last = e.poses.back();
        const double s = static_cast<double>(last.t) / 1e6;
        CHECK(std::hypot(last.cx - (100 + 30 * s), last.cy - (360 - 12 * s)) < 0.1);
    }
}

TEST_CASE("near-zero noise converges to truth after 10 updates") {
    ForecasterConfig cfg;
    cfg.noise = {1e-12, 1e-12, 1e-12, 1e-12, 1e-12, ScaleScope::Full};
    const auto track = line_track(40, 200, 200, 45, 20);
    const auto em = run_forecaster(track, {}, cfg);
    for (const auto& e : em) {
        if (e.t_emit < track[12].t) continue;
        // poses are stamped in whole microseconds; compare at the exact offset
        const auto& p = e.poses.front();
        const double s = static_cast<double>(e.t_emit) / 1e6 + 1.0 / 30;
        CHECK(std::hypot(p.cx - (200 + 45 * s), p.cy - (200 + 20 * s)) < 1e-6);
    }
}

TEST_CASE("run_forecaster: missing rpm equals explicit alpha 2 and an all-invalid series") {
    oracle::Gen g(1);
    auto track = line_track(50, 300, 300, 50, 10);
    for (auto& b : track) b.x_min += g.normal(2);
    ForecasterConfig cfg;
    const std::vector<double> two(track.size(), 2.0);
    std::vector<rpm::RpmEstimate> invalid(track.size());
    for (std::size_t i = 0; i < track.size(); ++i) invalid[i].t = track[i].t;
    const auto none = run_forecaster(track, {}, cfg);
    CHECK(none == run_forecaster_with_alpha(track, two, cfg));
    CHECK(none == run_forecaster(track, invalid, cfg));
}

TEST_CASE("modulation_at uses the sample at or before each observation") {
    const auto track = line_track(4, 0, 0, 0, 0);
    std::vector<rpm::RpmEstimate> series{{0, 0, 30000, 9, true, false}, {50'000, 0, 2300, 9, true, false}};
    const auto mods = modulation_at(track, series, {});
    CHECK(mods[0].r == 1.0);
    CHECK(mods[1].r == 1.0);
    CHECK(mods[2].r == 0.0);
    CHECK(mods[2].r_dot == -1.0);
    CHECK(mods[2].alpha_v == 1.0);
}
