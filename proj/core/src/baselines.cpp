#include "propcast/baselines.hpp"

#include <array>
#include <cmath>

namespace propcast::baselines {

Velocity mean_difference_velocity(std::span<const TrajectoryPoint, 4> poses) {
    Velocity v;
    for (std::size_t i = 1; i < poses.size(); ++i) {
        if (poses[i].t <= poses[i - 1].t) {
            throw ValidationError("linear extrapolation needs strictly increasing timestamps");
        }
        const double dt = static_cast<double>(poses[i].t - poses[i - 1].t) / 1e6;
        v.vx += (poses[i].cx - poses[i - 1].cx) / dt;
        v.vy += (poses[i].cy - poses[i - 1].cy) / dt;
    }
    v.vx /= 3.0;
    v.vy /= 3.0;
    return v;
}

Trajectory linear_extrapolate(std::span<const TrajectoryPoint, 4> last4, double horizon_s,
                              double step_s) {
    const Velocity v = mean_difference_velocity(last4);
    const TrajectoryPoint& origin = last4[3];
    Trajectory out;
    for (double off : kalman::forecast_offsets(horizon_s, step_s)) {
        out.push_back({origin.t + static_cast<Micros>(std::llround(off * 1e6)),
                       origin.cx + v.vx * off, origin.cy + v.vy * off});
    }
    return out;
}

std::vector<Emission> run_linear(std::span<const BoundingBoxObservation> track,
                                 const kalman::ForecastConfig& cfg) {
    cfg.validate();
    std::vector<Emission> out;
    for (std::size_t i : kalman::emission_indices(track, cfg)) {
        std::array<TrajectoryPoint, 4> last4;
        for (std::size_t k = 0; k < 4; ++k) {
            const auto& box = track[i - 3 + k];
            const Point2 c = box.center();
            last4[k] = {box.t, c.x, c.y};
        }
        for (double h : cfg.horizons) {
            out.push_back(Emission{track[i].t, h, linear_extrapolate(last4, h, cfg.step_s)});
        }
    }
    return out;
}

std::vector<Emission> vanilla_kalman(std::span<const BoundingBoxObservation> track,
                                     const kalman::ForecasterConfig& cfg) {
    return kalman::run_forecaster(track, {}, cfg, kalman::NoiseMode::Fixed);
}

}  // namespace propcast::baselines
