#pragma once

#include <span>
#include <vector>

#include "propcast/kalman.hpp"
#include "propcast/trajectory.hpp"

// Classical comparison methods. Both share the constant-velocity forecast grid
// and the emission frames of kalman::run_forecaster.
namespace propcast::baselines {

struct Velocity {
    double vx = 0.0;
    double vy = 0.0;
};

/// Mean of the three successive difference quotients of four poses.
/// Throws ValidationError unless timestamps strictly increase.
Velocity mean_difference_velocity(std::span<const TrajectoryPoint, 4> poses);

/// Constant-velocity forecast from the newest of `last4` on the grid of
/// kalman::forecast_offsets.
Trajectory linear_extrapolate(std::span<const TrajectoryPoint, 4> last4, double horizon_s,
                              double step_s);

/// Linear extrapolation from box centers at every emission frame.
std::vector<Emission> run_linear(std::span<const BoundingBoxObservation> track,
                                 const kalman::ForecastConfig& cfg);

/// The RPM-aware filter with the process noise fixed (alpha_v = 1).
std::vector<Emission> vanilla_kalman(std::span<const BoundingBoxObservation> track,
                                     const kalman::ForecasterConfig& cfg);

}  // namespace propcast::baselines
