#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "propcast/events.hpp"

namespace propcast {

/// Center point of the drone at time t (image pixels).
struct TrajectoryPoint {
    Micros t = 0;
    double cx = 0.0;
    double cy = 0.0;

    friend bool operator==(const TrajectoryPoint&, const TrajectoryPoint&) = default;
};

/// Strictly increasing in t.
using Trajectory = std::vector<TrajectoryPoint>;

/// Throws ValidationError unless timestamps strictly increase and values are finite.
void validate_trajectory(const Trajectory& trajectory);

/// Forecast issued at t_emit for one horizon; poses exclude the emission pose.
struct Emission {
    Micros t_emit = 0;
    double horizon_s = 0.0;
    Trajectory poses;

    friend bool operator==(const Emission&, const Emission&) = default;
};

inline constexpr std::string_view kForecastCsvHeader = "t_emit_us,horizon_s,t_pred_us,cx,cy";
inline constexpr std::string_view kTrajectoryCsvHeader = "t_us,cx,cy";

std::string write_forecast_csv(std::span<const Emission> emissions);
/// Groups rows by (t_emit, horizon) in file order.
std::vector<Emission> parse_forecast_csv(std::string_view text);

std::string write_trajectory_csv(const Trajectory& trajectory);
Trajectory parse_trajectory_csv(std::string_view text);

/// Box centers of one track as a trajectory.
Trajectory centers_of(std::span<const BoundingBoxObservation> track);

}  // namespace propcast
