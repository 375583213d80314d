#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "propcast/events.hpp"
#include "propcast/eval.hpp"
#include "propcast/trajectory.hpp"

// Synthetic event streams and drone tracks with known ground truth.
namespace propcast::synth {

/// Piecewise-constant RPM over time. Segment i applies from its start time
/// until the next segment starts; the first segment starts at t = 0.
class RpmProfile {
public:
    RpmProfile() : RpmProfile(constant(6000.0)) {}

    static RpmProfile constant(double rpm);
    /// (start time s, rpm) pairs with strictly increasing starts, first at 0.
    static RpmProfile steps(std::span<const std::pair<double, double>> segments);

    double rpm_at(double t_s) const;
    double revolutions_at(double t_s) const;
    /// Inverse of revolutions_at.
    double time_at_revolutions(double revolutions) const;

    const std::vector<std::pair<double, double>>& segments() const noexcept { return spec_; }

private:
    struct Segment {
        double t0;
        double rpm;
        double rev0;  ///< revolutions completed at t0
    };
    explicit RpmProfile(std::vector<std::pair<double, double>> spec);

    std::vector<std::pair<double, double>> spec_;
    std::vector<Segment> segments_;
};

/// A propeller seen face-on. Every pixel whose center lies between the hub
/// and blade tip gets, per blade passage, an ON event when the leading edge
/// arrives and an OFF event when the trailing edge leaves. The OFF->ON gap is
/// therefore T - dwell with T = 60 / (rpm * blades) and
/// dwell = blade_width / angular speed; a thin blade gives gaps of T.
struct PropellerSpec {
    Point2 center{640.0, 360.0};
    double blade_length_px = 12.0;
    int blades = 2;
    double blade_width_rad = 1e-4;
    RpmProfile rpm = RpmProfile::constant(6000.0);
    double hub_radius_px = 1.0;
    double phase_rad = 0.0;
    /// Uniform +-jitter per event. Jitter never reorders the events of one pixel.
    Micros jitter_us = 0;
    std::uint64_t seed = 0;

    void validate() const;
};

EventStream simulate_propeller_events(const PropellerSpec& spec, double duration_s,
                                      SensorGeometry geometry = {});

/// Where uniform noise goes. Unset fields default to the whole sensor and
/// [0, last event time].
struct NoiseRegion {
    std::optional<PixelRect> rect;
    Micros t_start = 0;
    std::optional<Micros> t_end;
};

/// Merges Poisson-count uniform noise (random polarity) into `stream`.
/// `rate` is events per second per 1000 pixels of the region. Deterministic
/// per seed; ties keep the original events first.
EventStream add_noise_events(const EventStream& stream, double rate, std::uint64_t seed,
                             const NoiseRegion& region = {});

enum class MotionKind { ConstantVelocity, Circular, Sinusoidal, RandomAccel };

struct Burst {
    double t_start_s = 0.0;
    double t_end_s = 0.0;
};

struct MotionProfile {
    MotionKind kind = MotionKind::ConstantVelocity;
    Point2 start{640.0, 360.0};
    Point2 velocity{0.0, 0.0};  ///< drift (constant/sinusoidal) or initial velocity (random_accel)
    double radius_px = 100.0;   ///< circular
    double frequency_hz = 0.25; ///< circular and sinusoidal
    Point2 amplitude{0.0, 0.0}; ///< sinusoidal
    double accel_std = 0.0;       ///< random_accel, px/s^2 per axis
    double burst_accel_std = 0.0; ///< random_accel inside bursts
    double accel_hold_s = 0.1;    ///< random_accel piecewise-constant hold
    std::vector<Burst> bursts;
    double margin_px = 40.0;  ///< random_accel bounces off this border
    std::uint64_t seed = 0;
};

/// Continuous center path. Positions leaving the sensor are clamped and
/// counted; random_accel paths bounce off the margin instead.
class CenterPath {
public:
    CenterPath(const MotionProfile& profile, double duration_s, SensorGeometry geometry = {});

    Point2 at(double t_s) const;
    std::size_t clamp_events() const noexcept { return clamp_events_; }
    double duration_s() const noexcept { return duration_s_; }

    /// Ground-truth lookup for evaluation, defined on [0, duration].
    eval::GroundTruth ground_truth() const;

private:
    struct Segment {
        double t0;
        Point2 p0;
        Point2 v0;
        Point2 a;
    };
    Point2 raw_at(double t_s) const;

    MotionProfile profile_;
    double duration_s_;
    SensorGeometry geometry_;
    std::vector<Segment> segments_;
    std::size_t clamp_events_ = 0;
};

struct BoxSize {
    double w = 40.0;
    double h = 30.0;
};

struct TrackOptions {
    double fps = 30.0;
    BoxSize box;
    int track_id = 0;
    double annotation_noise_px = 0.0;  ///< Gaussian std added to box centers
    std::uint64_t noise_seed = 0;
};

struct SimulatedTrack {
    std::vector<BoundingBoxObservation> annotations;
    Trajectory ground_truth;  ///< noiseless centers at the annotation times
    CenterPath path;
    std::size_t clamped_boxes = 0;
};

/// Boxes at t = k / fps for t < duration, centered on the (noisy) path.
SimulatedTrack simulate_track(const MotionProfile& profile, double duration_s,
                              const TrackOptions& options, SensorGeometry geometry = {});

/// Brute-force RPM: scores candidate periods 0.05..25.6 ms in 0.01 ms steps
/// by the number of per-pixel OFF->ON gaps within +-0.05 ms, picks the middle
/// of the best-scoring run, and converts with rpm = 60 / (T * blades).
/// Throws ValidationError when fewer than 10 gaps exist.
double oracle_rpm(std::span<const Event> events, int blades);

/// Everything needed to synthesise one drone sequence.
struct Scenario {
    SensorGeometry geometry;
    double duration_s = 2.0;
    double fps = 30.0;
    std::uint64_t seed = 0;
    int track_id = 0;
    BoxSize box{48.0, 36.0};
    MotionProfile motion;

    Point2 propeller_offset{0.0, 0.0};  ///< hub relative to the drone center
    double blade_length_px = 8.0;
    int blades = 2;
    double blade_width_rad = 1e-4;
    double hub_radius_px = 1.0;
    RpmProfile rpm = RpmProfile::constant(6000.0);
    double surge_rpm = 0.0;  ///< rpm during motion bursts when > 0

    double noise_rate = 0.0;           ///< sensor-wide, events/s per kilopixel
    double airframe_rate = 0.0;        ///< inside the drone box, events/s per kilopixel
    Micros jitter_us = 0;
    double annotation_noise_px = 0.0;
};

/// Parses the key-value scenario format; unknown keys are rejected.
/// Keys: geometry (WxH), duration_s, fps, seed, track_id, box.w, box.h,
/// motion.{kind, start_x, start_y, vx, vy, radius, freq_hz, amp_x, amp_y,
/// accel_std, burst_accel_std, accel_hold_s, margin_px, bursts, burst_count,
/// burst_duration_s}, propeller.{offset_x, offset_y, blade_length, blades,
/// blade_width_rad, hub_radius, rpm, rpm_profile, surge_rpm},
/// noise.{rate, airframe_rate, jitter_us, annotation_px}.
Scenario parse_scenario(std::string_view text);

struct ScenarioOutput {
    EventStream events;
    SimulatedTrack track;
    RpmProfile rpm;  ///< effective profile including surges
};

/// Propeller and airframe events are generated in the drone frame and moved
/// with the rounded center path; sensor-wide noise is added afterwards.
ScenarioOutput generate_scenario(const Scenario& scenario);

/// Random-acceleration sequence whose acceleration bursts coincide with RPM
/// surges; used by the forecasting ordering benchmark.
Scenario maneuver_benchmark_scenario(std::uint64_t seed);

}  // namespace propcast::synth
