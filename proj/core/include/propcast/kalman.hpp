#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "propcast/events.hpp"
#include "propcast/rpm.hpp"
#include "propcast/trajectory.hpp"

// Constant-velocity Kalman filter in image space whose process noise is
// scaled by a factor derived from the propeller RPM.
namespace propcast::kalman {

using Vec4 = Eigen::Matrix<double, 4, 1>;
using Mat4 = Eigen::Matrix<double, 4, 4>;

/// State (cx, cy, vx, vy) in px and px/s, covariance P, time of last update.
struct FilterState {
    Vec4 x = Vec4::Zero();
    Mat4 P = Mat4::Identity();
    Micros t = 0;
};

/// Which diagonal entries of the base process noise the RPM factor scales.
enum class ScaleScope { Full, VelocityOnly };

struct NoiseConfig {
    double q_cx = 1.0;   ///< px^2 per second
    double q_cy = 1.0;
    double q_vx = 10.0;  ///< (px/s)^2 per second
    double q_vy = 10.0;
    double r_pos = 1.0;  ///< px^2
    ScaleScope scale_scope = ScaleScope::Full;

    void validate() const;

    /// alpha_v * diag(q) * dt, with alpha_v applied per scale_scope.
    Mat4 process_noise(double alpha_v, double dt_s) const;
};

/// Full-state measurement. The velocity is a difference quotient over
/// `velocity_baseline_s`, which sets its variance to 2 r_pos / baseline^2.
struct Measurement {
    Micros t = 0;
    double cx = 0.0;
    double cy = 0.0;
    double vx = 0.0;
    double vy = 0.0;
    double velocity_baseline_s = 1.0 / 30.0;
};

struct ModulationConfig {
    double rpm_lo = 2'300.0;
    double rpm_hi = 30'000.0;
    double rdot_scale = 2.0;  ///< r units per second mapped to r_dot = 1

    void validate() const;
};

struct RpmModulation {
    double r = 0.5;
    double r_dot = 0.0;
    double alpha_v = 2.0;
};

/// clamp((rpm - lo) / (hi - lo), 0, 1). Throws ValidationError when lo >= hi.
double normalize_rpm(double rpm, double rpm_lo, double rpm_hi);

/// clamp(((r_now - r_then) / dt) / scale, -1, 1). Requires dt > 0.
double compute_r_dot(double r_now, double r_then, double dt_s, double scale = 2.0);

/// max(0.5, 1 + 2r + max(0, r_dot)). Throws ValidationError when r is outside
/// [0, 1] or r_dot outside [-1, 1].
double compute_alpha_v(double r, double r_dot);

/// Turns an RPM series into (r, r_dot, alpha_v). Invalid samples hold the
/// last valid r with r_dot = 0; before any valid sample r = 0.5.
class RpmModulator {
public:
    explicit RpmModulator(ModulationConfig config = {});

    const RpmModulation& push(const rpm::RpmEstimate& estimate);
    const RpmModulation& current() const noexcept { return current_; }

private:
    ModulationConfig config_;
    std::optional<Micros> last_valid_t_;
    RpmModulation current_;
};

/// P <- F P F^T + Q(alpha_v, dt); mean advanced by the constant-velocity
/// transition. Throws ValidationError when dt <= 0.
FilterState kf_predict(const FilterState& s, double dt_s, double alpha_v, const NoiseConfig& cfg);

/// Standard update with H = I and R = diag(r_pos, r_pos, r_vel, r_vel).
/// Throws ValidationError for non-finite measurements or m.t < s.t.
FilterState kf_update(const FilterState& s, const Measurement& m, const NoiseConfig& cfg);

/// Center of `curr` and the velocity between the two box centers.
/// Throws ValidationError unless curr.t > prev.t and both share a track.
Measurement measurement_from_boxes(const BoundingBoxObservation& curr,
                                   const BoundingBoxObservation& prev);

/// Offsets (seconds) of the forecast poses: step, 2*step, ..., with the last
/// one pinned at `horizon`. There are ceil(horizon / step) of them.
std::vector<double> forecast_offsets(double horizon_s, double step_s);

struct Forecast {
    Trajectory poses;
    std::vector<double> covariance_trace;  ///< trace(P) at each pose
    FilterState final_state;
};

/// Repeated prediction without updates. The input state is not modified.
Forecast forecast(const FilterState& s, double horizon_s, double step_s, double alpha_v,
                  const NoiseConfig& cfg);

struct ForecastConfig {
    std::vector<double> horizons{0.4, 0.8};
    double step_s = 1.0 / 30.0;

    void validate() const;
    double max_horizon() const;
};

struct ForecasterConfig {
    NoiseConfig noise;
    ModulationConfig modulation;
    ForecastConfig forecast;
    double p0_pos = 10.0;   ///< initial position variance, px^2
    double p0_vel = 100.0;  ///< initial velocity variance, (px/s)^2

    void validate() const;
};

enum class NoiseMode { RpmModulated, Fixed };

/// Every method emits from the same annotation frames: at least this many
/// poses of history, including the current one.
inline constexpr std::size_t kMinHistory = 4;

/// Indices of `track` that emit forecasts: enough history and ground truth
/// reaching the longest horizon (within half a step).
std::vector<std::size_t> emission_indices(std::span<const BoundingBoxObservation> track,
                                          const ForecastConfig& cfg);

/// Modulation in effect at every observation: the RPM sample at or before
/// the observation time, or the neutral hold when none exists yet.
std::vector<RpmModulation> modulation_at(std::span<const BoundingBoxObservation> track,
                                         std::span<const rpm::RpmEstimate> series,
                                         const ModulationConfig& cfg);

/// Filters `track` and emits forecasts at every emission index for every
/// configured horizon. With NoiseMode::Fixed alpha_v is pinned to 1 and the
/// RPM series is ignored. Throws ValidationError for fewer than 2 observations.
std::vector<Emission> run_forecaster(std::span<const BoundingBoxObservation> track,
                                     std::span<const rpm::RpmEstimate> rpm_series,
                                     const ForecasterConfig& cfg,
                                     NoiseMode mode = NoiseMode::RpmModulated);

/// Same filter driven by an explicit alpha_v per observation.
std::vector<Emission> run_forecaster_with_alpha(std::span<const BoundingBoxObservation> track,
                                                std::span<const double> alpha_per_observation,
                                                const ForecasterConfig& cfg);

}  // namespace propcast::kalman
