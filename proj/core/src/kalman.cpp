#include "propcast/kalman.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>

#include "propcast/text.hpp"

namespace propcast::kalman {
namespace {

constexpr double kMicrosPerSecond = 1e6;

Micros to_micros(double seconds) { return static_cast<Micros>(std::llround(seconds * kMicrosPerSecond)); }

void symmetrize(Mat4& P) { P = (0.5 * (P + P.transpose())).eval(); }

}  // namespace

void NoiseConfig::validate() const {
    for (double q : {q_cx, q_cy, q_vx, q_vy, r_pos}) {
        if (!(q > 0.0) || !std::isfinite(q)) {
            throw ValidationError("noise config entries must be positive and finite");
        }
    }
}

Mat4 NoiseConfig::process_noise(double alpha_v, double dt_s) const {
    const double pos_scale = scale_scope == ScaleScope::Full ? alpha_v : 1.0;
    Vec4 diag;
    diag << q_cx * pos_scale, q_cy * pos_scale, q_vx * alpha_v, q_vy * alpha_v;
    return Mat4(diag.asDiagonal()) * dt_s;
}

void ModulationConfig::validate() const {
    if (!(rpm_lo < rpm_hi)) {
        throw ValidationError("modulation rpm_lo must be below rpm_hi (got " +
                              text::format_double(rpm_lo) + " >= " + text::format_double(rpm_hi) + ")");
    }
    if (!(rdot_scale > 0.0)) throw ValidationError("modulation rdot_scale must be positive");
}

double normalize_rpm(double rpm, double rpm_lo, double rpm_hi) {
    if (!(rpm_lo < rpm_hi)) throw ValidationError("normalize_rpm: rpm_lo must be below rpm_hi");
    return std::clamp((rpm - rpm_lo) / (rpm_hi - rpm_lo), 0.0, 1.0);
}

double compute_r_dot(double r_now, double r_then, double dt_s, double scale) {
    if (!(dt_s > 0.0)) throw ValidationError("compute_r_dot: dt must be positive");
    if (!(scale > 0.0)) throw ValidationError("compute_r_dot: scale must be positive");
    return std::clamp(((r_now - r_then) / dt_s) / scale, -1.0, 1.0);
}

double compute_alpha_v(double r, double r_dot) {
    if (!(r >= 0.0 && r <= 1.0)) {
        throw ValidationError("compute_alpha_v: r outside [0, 1]: " + text::format_double(r));
    }
    if (!(r_dot >= -1.0 && r_dot <= 1.0)) {
        throw ValidationError("compute_alpha_v: r_dot outside [-1, 1]: " + text::format_double(r_dot));
    }
    return std::max(0.5, 1.0 + 2.0 * r + std::max(0.0, r_dot));
}

RpmModulator::RpmModulator(ModulationConfig config) : config_(config) {
    config_.validate();
    current_.alpha_v = compute_alpha_v(current_.r, current_.r_dot);
}

const RpmModulation& RpmModulator::push(const rpm::RpmEstimate& estimate) {
    if (!estimate.valid) {
        current_.r_dot = 0.0;
    } else {
        const double r = normalize_rpm(estimate.rpm, config_.rpm_lo, config_.rpm_hi);
        double r_dot = 0.0;
        if (last_valid_t_ && estimate.t > *last_valid_t_) {
            const double dt = static_cast<double>(estimate.t - *last_valid_t_) / kMicrosPerSecond;
            r_dot = compute_r_dot(r, current_.r, dt, config_.rdot_scale);
        }
        current_.r = r;
        current_.r_dot = r_dot;
        last_valid_t_ = estimate.t;
    }
    current_.alpha_v = compute_alpha_v(current_.r, current_.r_dot);
    return current_;
}

FilterState kf_predict(const FilterState& s, double dt_s, double alpha_v, const NoiseConfig& cfg) {
    if (!(dt_s > 0.0)) throw ValidationError("kf_predict: dt must be positive");
    Mat4 F = Mat4::Identity();
    F(0, 2) = dt_s;
    F(1, 3) = dt_s;

    FilterState out;
    out.x = F * s.x;
    out.P = F * s.P * F.transpose() + cfg.process_noise(alpha_v, dt_s);
    symmetrize(out.P);
    out.t = s.t + to_micros(dt_s);
    return out;
}

FilterState kf_update(const FilterState& s, const Measurement& m, const NoiseConfig& cfg) {
    if (!std::isfinite(m.cx) || !std::isfinite(m.cy) || !std::isfinite(m.vx) ||
        !std::isfinite(m.vy) || !(m.velocity_baseline_s > 0.0)) {
        throw ValidationError("kf_update: non-finite measurement");
    }
    if (m.t < s.t) throw ValidationError("kf_update: measurement precedes the filter state");

    const double r_vel = 2.0 * cfg.r_pos / (m.velocity_baseline_s * m.velocity_baseline_s);
    Vec4 r_diag;
    r_diag << cfg.r_pos, cfg.r_pos, r_vel, r_vel;
    const Mat4 R = r_diag.asDiagonal();
    Vec4 z;
    z << m.cx, m.cy, m.vx, m.vy;

    // K = P S^-1 with S symmetric, so K^T = S^-1 P.
    const Mat4 S = s.P + R;
    const Mat4 K = S.ldlt().solve(s.P).transpose();
    const Mat4 I_K = Mat4::Identity() - K;

    FilterState out;
    out.x = s.x + K * (z - s.x);
    // Joseph form keeps P positive semi-definite under rounding.
    out.P = I_K * s.P * I_K.transpose() + K * R * K.transpose();
    symmetrize(out.P);
    out.t = m.t;
    return out;
}

Measurement measurement_from_boxes(const BoundingBoxObservation& curr,
                                   const BoundingBoxObservation& prev) {
    if (curr.track_id != prev.track_id) {
        throw ValidationError("measurement_from_boxes: boxes belong to different tracks");
    }
    if (curr.t <= prev.t) {
        throw ValidationError("measurement_from_boxes: timestamps must increase (" +
                              std::to_string(prev.t) + " -> " + std::to_string(curr.t) + ")");
    }
    const double dt = static_cast<double>(curr.t - prev.t) / kMicrosPerSecond;
    const Point2 c = curr.center();
    const Point2 p = prev.center();
    return Measurement{curr.t, c.x, c.y, (c.x - p.x) / dt, (c.y - p.y) / dt, dt};
}

std::vector<double> forecast_offsets(double horizon_s, double step_s) {
    if (!(horizon_s > 0.0) || !(step_s > 0.0)) {
        throw ValidationError("forecast horizon and step must be positive");
    }
    // Tolerate representation error so 0.4 / (1/30) gives 12 steps, not 13.
    const auto n = static_cast<std::size_t>(std::ceil(horizon_s / step_s - 1e-9));
    std::vector<double> offsets;
    offsets.reserve(n);
    for (std::size_t k = 1; k < n; ++k) offsets.push_back(static_cast<double>(k) * step_s);
    offsets.push_back(horizon_s);
    return offsets;
}

Forecast forecast(const FilterState& s, double horizon_s, double step_s, double alpha_v,
                  const NoiseConfig& cfg) {
    const auto offsets = forecast_offsets(horizon_s, step_s);
    Forecast out;
    out.poses.reserve(offsets.size());
    out.covariance_trace.reserve(offsets.size());
    FilterState cur = s;
    double prev = 0.0;
    for (double off : offsets) {
        cur = kf_predict(cur, off - prev, alpha_v, cfg);
        cur.t = s.t + to_micros(off);
        prev = off;
        out.poses.push_back({cur.t, cur.x(0), cur.x(1)});
        out.covariance_trace.push_back(cur.P.trace());
    }
    out.final_state = cur;
    return out;
}

void ForecastConfig::validate() const {
    if (horizons.empty()) throw ValidationError("at least one forecast horizon is required");
    for (double h : horizons) {
        if (!(h > 0.0)) throw ValidationError("forecast horizons must be positive");
    }
    if (!(step_s > 0.0)) throw ValidationError("forecast step must be positive");
}

double ForecastConfig::max_horizon() const {
    return horizons.empty() ? 0.0 : *std::max_element(horizons.begin(), horizons.end());
}

void ForecasterConfig::validate() const {
    noise.validate();
    modulation.validate();
    forecast.validate();
    if (!(p0_pos > 0.0) || !(p0_vel > 0.0)) {
        throw ValidationError("initial covariance entries must be positive");
    }
}

std::vector<std::size_t> emission_indices(std::span<const BoundingBoxObservation> track,
                                          const ForecastConfig& cfg) {
    std::vector<std::size_t> out;
    if (track.size() < kMinHistory) return out;
    const Micros horizon = to_micros(cfg.max_horizon());
    const Micros slack = to_micros(cfg.step_s / 2.0);
    const Micros t_last = track.back().t;
    for (std::size_t i = kMinHistory - 1; i < track.size(); ++i) {
        if (track[i].t + horizon <= t_last + slack) out.push_back(i);
    }
    return out;
}

std::vector<RpmModulation> modulation_at(std::span<const BoundingBoxObservation> track,
                                         std::span<const rpm::RpmEstimate> series,
                                         const ModulationConfig& cfg) {
    RpmModulator modulator(cfg);
    std::vector<RpmModulation> out;
    out.reserve(track.size());
    std::size_t next = 0;
    for (const auto& box : track) {
        while (next < series.size() && series[next].t <= box.t) modulator.push(series[next++]);
        out.push_back(modulator.current());
    }
    return out;
}

std::vector<Emission> run_forecaster_with_alpha(std::span<const BoundingBoxObservation> track,
                                                std::span<const double> alpha_per_observation,
                                                const ForecasterConfig& cfg) {
    cfg.validate();
    if (track.size() < 2) {
        throw ValidationError("forecaster needs at least 2 observations, got " +
                              std::to_string(track.size()));
    }
    if (alpha_per_observation.size() != track.size()) {
        throw ValidationError("forecaster: one alpha_v per observation required");
    }

    const Measurement first = measurement_from_boxes(track[1], track[0]);
    FilterState state;
    state.x << first.cx, first.cy, first.vx, first.vy;
    Vec4 p0;
    p0 << cfg.p0_pos, cfg.p0_pos, cfg.p0_vel, cfg.p0_vel;
    state.P = p0.asDiagonal();
    state.t = first.t;

    const auto emit_at = emission_indices(track, cfg.forecast);
    auto next_emit = emit_at.begin();

    std::vector<Emission> out;
    out.reserve(emit_at.size() * cfg.forecast.horizons.size());
    for (std::size_t i = 2; i < track.size(); ++i) {
        const double alpha = alpha_per_observation[i];
        const Measurement m = measurement_from_boxes(track[i], track[i - 1]);
        const double dt = static_cast<double>(m.t - state.t) / kMicrosPerSecond;
        state = kf_update(kf_predict(state, dt, alpha, cfg.noise), m, cfg.noise);

        while (next_emit != emit_at.end() && *next_emit < i) ++next_emit;
        if (next_emit == emit_at.end() || *next_emit != i) continue;
        for (double h : cfg.forecast.horizons) {
            auto fc = forecast(state, h, cfg.forecast.step_s, alpha, cfg.noise);
            out.push_back(Emission{state.t, h, std::move(fc.poses)});
        }
    }
    return out;
}

std::vector<Emission> run_forecaster(std::span<const BoundingBoxObservation> track,
                                     std::span<const rpm::RpmEstimate> rpm_series,
                                     const ForecasterConfig& cfg, NoiseMode mode) {
    std::vector<double> alpha(track.size(), 1.0);
    if (mode == NoiseMode::RpmModulated) {
        const auto mods = modulation_at(track, rpm_series, cfg.modulation);
        std::transform(mods.begin(), mods.end(), alpha.begin(),
                       [](const RpmModulation& m) { return m.alpha_v; });
    }
    return run_forecaster_with_alpha(track, alpha, cfg);
}

}  // namespace propcast::kalman
