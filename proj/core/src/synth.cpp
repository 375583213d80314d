#include "propcast/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <unordered_map>

#include "propcast/kv.hpp"
#include "propcast/text.hpp"

namespace propcast::synth {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Micros to_micros(double s) { return static_cast<Micros>(std::llround(s * 1e6)); }

// splitmix64 finaliser; gives independent generator seeds per purpose.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (purpose + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

enum SeedPurpose : std::uint64_t { kMotion, kAnnotation, kJitter, kAirframe, kSensorNoise, kBursts };

bool event_less(const Event& a, const Event& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.y != b.y) return a.y < b.y;
    if (a.x != b.x) return a.x < b.x;
    return a.polarity > b.polarity;  // ON before OFF at the same instant
}

std::vector<Burst> random_bursts(int count, double burst_s, double duration_s, std::uint64_t seed) {
    std::vector<Burst> bursts;
    if (count <= 0 || burst_s <= 0.0) return bursts;
    std::mt19937_64 rng(seed);
    const double lo = 1.0;
    const double hi = duration_s - burst_s - 0.5;
    if (hi <= lo) throw ValidationError("scenario too short for motion bursts");
    std::uniform_real_distribution<double> start(lo, hi);
    for (int attempt = 0; attempt < 10'000 && static_cast<int>(bursts.size()) < count; ++attempt) {
        const double s = start(rng);
        const bool overlaps = std::any_of(bursts.begin(), bursts.end(), [&](const Burst& b) {
            return s < b.t_end_s + burst_s && s + burst_s > b.t_start_s - burst_s;
        });
        if (!overlaps) bursts.push_back({s, s + burst_s});
    }
    if (static_cast<int>(bursts.size()) < count) {
        throw ValidationError("cannot place " + std::to_string(count) + " motion bursts");
    }
    std::sort(bursts.begin(), bursts.end(),
              [](const Burst& a, const Burst& b) { return a.t_start_s < b.t_start_s; });
    return bursts;
}

}  // namespace

// --- RpmProfile ------------------------------------------------------------

RpmProfile::RpmProfile(std::vector<std::pair<double, double>> spec) : spec_(std::move(spec)) {
    if (spec_.empty() || spec_.front().first != 0.0) {
        throw ValidationError("rpm profile must start at t = 0");
    }
    double rev = 0.0;
    for (std::size_t i = 0; i < spec_.size(); ++i) {
        const auto [t0, rpm] = spec_[i];
        if (!(rpm > 0.0) || !std::isfinite(rpm)) throw ValidationError("rpm profile values must be positive");
        if (i > 0) {
            if (!(t0 > spec_[i - 1].first)) {
                throw ValidationError("rpm profile segment starts must increase");
            }
            rev += (t0 - segments_.back().t0) * segments_.back().rpm / 60.0;
        }
        segments_.push_back({t0, rpm, rev});
    }
}

RpmProfile RpmProfile::constant(double rpm) { return RpmProfile({{0.0, rpm}}); }

RpmProfile RpmProfile::steps(std::span<const std::pair<double, double>> segments) {
    return RpmProfile(std::vector<std::pair<double, double>>(segments.begin(), segments.end()));
}

double RpmProfile::rpm_at(double t_s) const {
    const auto it = std::upper_bound(segments_.begin(), segments_.end(), t_s,
                                     [](double t, const Segment& s) { return t < s.t0; });
    return it == segments_.begin() ? segments_.front().rpm : std::prev(it)->rpm;
}

double RpmProfile::revolutions_at(double t_s) const {
    const auto it = std::upper_bound(segments_.begin(), segments_.end(), t_s,
                                     [](double t, const Segment& s) { return t < s.t0; });
    const Segment& s = it == segments_.begin() ? segments_.front() : *std::prev(it);
    return s.rev0 + (t_s - s.t0) * s.rpm / 60.0;
}

double RpmProfile::time_at_revolutions(double revolutions) const {
    const auto it = std::upper_bound(segments_.begin(), segments_.end(), revolutions,
                                     [](double r, const Segment& s) { return r < s.rev0; });
    const Segment& s = it == segments_.begin() ? segments_.front() : *std::prev(it);
    return s.t0 + (revolutions - s.rev0) * 60.0 / s.rpm;
}

// --- propeller events ------------------------------------------------------

void PropellerSpec::validate() const {
    if (blades < 1) throw ValidationError("propeller needs at least one blade");
    if (!(blade_length_px >= 2.0)) throw ValidationError("blade length must be at least 2 px");
    if (!(blade_width_rad >= 0.0) || !(blade_width_rad < kTwoPi / blades)) {
        throw ValidationError("blade width must lie in [0, 2*pi / blades)");
    }
    if (!(hub_radius_px >= 0.0) || hub_radius_px >= blade_length_px) {
        throw ValidationError("hub radius must lie in [0, blade length)");
    }
    if (jitter_us < 0) throw ValidationError("jitter must be non-negative");
}

EventStream simulate_propeller_events(const PropellerSpec& spec, double duration_s,
                                      SensorGeometry geometry) {
    spec.validate();
    geometry.validate();
    const Micros duration_us = to_micros(duration_s);
    const double pitch = kTwoPi / spec.blades;
    const double width_passes = spec.blade_width_rad / pitch;
    const double total_passes = spec.rpm.revolutions_at(duration_s) * spec.blades;

    std::mt19937_64 rng(spec.seed);
    std::uniform_int_distribution<Micros> jitter(-spec.jitter_us, spec.jitter_us);
    const auto jittered = [&](Micros t) { return spec.jitter_us > 0 ? t + jitter(rng) : t; };
    const auto time_of = [&](double passes) {
        return to_micros(spec.rpm.time_at_revolutions(passes / spec.blades));
    };

    const auto x_lo = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(spec.center.x - spec.blade_length_px)));
    const auto x_hi = std::min<std::int64_t>(geometry.width - 1, static_cast<std::int64_t>(std::ceil(spec.center.x + spec.blade_length_px)));
    const auto y_lo = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(spec.center.y - spec.blade_length_px)));
    const auto y_hi = std::min<std::int64_t>(geometry.height - 1, static_cast<std::int64_t>(std::ceil(spec.center.y + spec.blade_length_px)));

    std::vector<Event> events;
    for (std::int64_t y = y_lo; y <= y_hi; ++y) {
        for (std::int64_t x = x_lo; x <= x_hi; ++x) {
            const double dx = static_cast<double>(x) - spec.center.x;
            const double dy = static_cast<double>(y) - spec.center.y;
            const double r = std::hypot(dx, dy);
            if (r < spec.hub_radius_px || r > spec.blade_length_px) continue;

            // Blade passes are counted in units of the blade pitch; the leading
            // edge of some blade reaches this pixel at passes = offset + n.
            const double rel = (std::atan2(dy, dx) - spec.phase_rad) / pitch;
            const double offset = rel - std::floor(rel);
            Micros prev_off = -1;
            for (double lead = offset; lead + width_passes < total_passes; lead += 1.0) {
                Micros t_on = jittered(time_of(lead));
                Micros t_off = jittered(time_of(lead + width_passes));
                t_on = std::max<Micros>({t_on, prev_off + 1, 0});
                t_off = std::max(t_off, t_on);
                if (t_off >= duration_us) break;
                const auto ux = static_cast<std::uint16_t>(x);
                const auto uy = static_cast<std::uint16_t>(y);
                events.push_back({t_on, ux, uy, Polarity::On});
                events.push_back({t_off, ux, uy, Polarity::Off});
                prev_off = t_off;
            }
        }
    }
    std::sort(events.begin(), events.end(), event_less);
    return EventStream(geometry, std::move(events));
}

EventStream add_noise_events(const EventStream& stream, double rate, std::uint64_t seed,
                             const NoiseRegion& region) {
    if (rate < 0.0) throw ValidationError("noise rate must be non-negative");
    if (rate == 0.0) return stream;
    const SensorGeometry& g = stream.geometry();
    PixelRect rect = region.rect.value_or(PixelRect{0, 0, g.width - 1, g.height - 1});
    rect.x0 = std::max<std::int64_t>(rect.x0, 0);
    rect.y0 = std::max<std::int64_t>(rect.y0, 0);
    rect.x1 = std::min<std::int64_t>(rect.x1, g.width - 1);
    rect.y1 = std::min<std::int64_t>(rect.y1, g.height - 1);
    const Micros t_end = region.t_end.value_or(stream.empty() ? 0 : stream.events().back().t + 1);
    if (rect.empty() || t_end <= region.t_start) return stream;

    const double mean = rate * static_cast<double>(rect.area()) / 1000.0 *
                        static_cast<double>(t_end - region.t_start) / 1e6;
    std::mt19937_64 rng(seed);
    std::poisson_distribution<std::int64_t> count_dist(mean);
    const auto count = static_cast<std::size_t>(count_dist(rng));
    std::uniform_int_distribution<Micros> t_dist(region.t_start, t_end - 1);
    std::uniform_int_distribution<std::int64_t> x_dist(rect.x0, rect.x1);
    std::uniform_int_distribution<std::int64_t> y_dist(rect.y0, rect.y1);
    std::bernoulli_distribution on_dist(0.5);

    std::vector<Event> noise(count);
    for (auto& e : noise) {
        e.t = t_dist(rng);
        e.x = static_cast<std::uint16_t>(x_dist(rng));
        e.y = static_cast<std::uint16_t>(y_dist(rng));
        e.polarity = on_dist(rng) ? Polarity::On : Polarity::Off;
    }
    std::sort(noise.begin(), noise.end(), event_less);

    std::vector<Event> merged;
    merged.reserve(stream.size() + noise.size());
    std::merge(stream.events().begin(), stream.events().end(), noise.begin(), noise.end(),
               std::back_inserter(merged), [](const Event& a, const Event& b) { return a.t < b.t; });
    return EventStream(g, std::move(merged));
}

// --- motion ----------------------------------------------------------------

CenterPath::CenterPath(const MotionProfile& profile, double duration_s, SensorGeometry geometry)
    : profile_(profile), duration_s_(duration_s), geometry_(geometry) {
    geometry_.validate();
    if (!(duration_s > 0.0)) throw ValidationError("path duration must be positive");

    if (profile_.kind == MotionKind::RandomAccel) {
        if (!(profile_.accel_hold_s > 0.0)) throw ValidationError("accel hold must be positive");
        if (profile_.accel_std < 0.0 || profile_.burst_accel_std < 0.0) {
            throw ValidationError("acceleration std must be non-negative");
        }
        std::mt19937_64 rng(profile_.seed);
        std::normal_distribution<double> unit(0.0, 1.0);
        const double h = profile_.accel_hold_s;
        const auto n = static_cast<std::size_t>(std::ceil(duration_s / h)) + 1;
        const double lo_x = profile_.margin_px;
        const double hi_x = geometry_.width - 1.0 - profile_.margin_px;
        const double lo_y = profile_.margin_px;
        const double hi_y = geometry_.height - 1.0 - profile_.margin_px;

        Point2 p = profile_.start;
        Point2 v = profile_.velocity;
        const auto bounce = [&](double& pos, double& vel, double& acc, double lo, double hi) {
            const double end = pos + vel * h + 0.5 * acc * h * h;
            if (end >= lo && end <= hi) return;
            ++clamp_events_;
            const double outward = end > hi ? 1.0 : -1.0;
            if (vel * outward > 0.0) vel = -vel;
            if (acc * outward > 0.0) acc = -acc;
            const double again = pos + vel * h + 0.5 * acc * h * h;
            if (again < lo || again > hi) {
                vel = 0.0;
                acc = 0.0;
            }
        };
        for (std::size_t k = 0; k < n; ++k) {
            const double t0 = static_cast<double>(k) * h;
            const double mid = t0 + h / 2.0;
            const bool in_burst = std::any_of(profile_.bursts.begin(), profile_.bursts.end(),
                                              [&](const Burst& b) { return mid >= b.t_start_s && mid < b.t_end_s; });
            const double sigma = in_burst ? profile_.burst_accel_std : profile_.accel_std;
            Point2 a{sigma * unit(rng), sigma * unit(rng)};
            bounce(p.x, v.x, a.x, lo_x, hi_x);
            bounce(p.y, v.y, a.y, lo_y, hi_y);
            segments_.push_back({t0, p, v, a});
            p = {p.x + v.x * h + 0.5 * a.x * h * h, p.y + v.y * h + 0.5 * a.y * h * h};
            v = {v.x + a.x * h, v.y + a.y * h};
        }
    } else {
        // Analytic paths: count millisecond samples that would leave the sensor.
        const auto samples = static_cast<std::size_t>(std::ceil(duration_s * 1000.0));
        for (std::size_t i = 0; i <= samples; ++i) {
            const Point2 c = raw_at(static_cast<double>(i) / 1000.0);
            if (!geometry_.contains(static_cast<std::int64_t>(std::floor(c.x)),
                                    static_cast<std::int64_t>(std::floor(c.y)))) {
                ++clamp_events_;
            }
        }
    }
}

Point2 CenterPath::raw_at(double t) const {
    const MotionProfile& m = profile_;
    switch (m.kind) {
        case MotionKind::ConstantVelocity:
            return {m.start.x + m.velocity.x * t, m.start.y + m.velocity.y * t};
        case MotionKind::Circular: {
            const double w = kTwoPi * m.frequency_hz * t;
            return {m.start.x + m.radius_px * (std::cos(w) - 1.0), m.start.y + m.radius_px * std::sin(w)};
        }
        case MotionKind::Sinusoidal: {
            const double s = std::sin(kTwoPi * m.frequency_hz * t);
            return {m.start.x + m.velocity.x * t + m.amplitude.x * s,
                    m.start.y + m.velocity.y * t + m.amplitude.y * s};
        }
        case MotionKind::RandomAccel: {
            const auto k = std::min(segments_.size() - 1,
                                    static_cast<std::size_t>(std::max(0.0, std::floor(t / m.accel_hold_s))));
            const Segment& s = segments_[k];
            const double tau = t - s.t0;
            return {s.p0.x + s.v0.x * tau + 0.5 * s.a.x * tau * tau,
                    s.p0.y + s.v0.y * tau + 0.5 * s.a.y * tau * tau};
        }
    }
    return m.start;
}

Point2 CenterPath::at(double t_s) const {
    const Point2 c = raw_at(t_s);
    return {std::clamp(c.x, 0.0, geometry_.width - 1.0), std::clamp(c.y, 0.0, geometry_.height - 1.0)};
}

eval::GroundTruth CenterPath::ground_truth() const {
    return [path = *this](Micros t) -> std::optional<Point2> {
        const double s = static_cast<double>(t) / 1e6;
        if (s < 0.0 || s > path.duration_s_ + 1e-9) return std::nullopt;
        return path.at(s);
    };
}

SimulatedTrack simulate_track(const MotionProfile& profile, double duration_s,
                              const TrackOptions& options, SensorGeometry geometry) {
    if (!(options.fps > 0.0)) throw ValidationError("fps must be positive");
    if (!(options.box.w > 0.0) || !(options.box.h > 0.0)) throw ValidationError("box size must be positive");
    SimulatedTrack out{{}, {}, CenterPath(profile, duration_s, geometry), 0};
    std::mt19937_64 rng(options.noise_seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    const auto n = static_cast<std::size_t>(std::floor(duration_s * options.fps + 1e-9));
    for (std::size_t i = 0; i < n; ++i) {
        const Micros t = to_micros(static_cast<double>(i) / options.fps);
        const Point2 c = out.path.at(static_cast<double>(t) / 1e6);
        out.ground_truth.push_back({t, c.x, c.y});
        Point2 m = c;
        if (options.annotation_noise_px > 0.0) {
            m.x += options.annotation_noise_px * noise(rng);
            m.y += options.annotation_noise_px * noise(rng);
        }
        BoundingBoxObservation box{t, options.track_id, m.x - options.box.w / 2.0,
                                   m.y - options.box.h / 2.0, options.box.w, options.box.h, false};
        box = clamp_to(box, geometry);
        if (box.clamped) ++out.clamped_boxes;
        out.annotations.push_back(box);
    }
    return out;
}

// --- oracle ----------------------------------------------------------------

double oracle_rpm(std::span<const Event> events, int blades) {
    if (blades < 1) throw ValidationError("blade count must be at least 1");
    std::unordered_map<std::uint32_t, Micros> last_off;
    std::vector<Micros> gaps;
    for (const Event& e : events) {
        const std::uint32_t key = (std::uint32_t{e.y} << 16) | e.x;
        if (e.polarity == Polarity::Off) {
            last_off[key] = e.t;
        } else if (const auto it = last_off.find(key); it != last_off.end()) {
            gaps.push_back(e.t - it->second);
        }
    }
    if (gaps.size() < 10) {
        throw ValidationError("oracle_rpm: only " + std::to_string(gaps.size()) + " OFF->ON gaps");
    }
    std::sort(gaps.begin(), gaps.end());

    // Candidates in microseconds: 50, 60, ..., 25600; window +-50 us.
    constexpr Micros kFirst = 50, kStep = 10, kLast = 25'600, kHalfWindow = 50;
    std::ptrdiff_t best = -1;
    Micros run_begin = 0, run_end = 0;
    bool in_run = false;
    for (Micros c = kFirst; c <= kLast; c += kStep) {
        const auto lo = std::lower_bound(gaps.begin(), gaps.end(), c - kHalfWindow);
        const auto hi = std::upper_bound(gaps.begin(), gaps.end(), c + kHalfWindow);
        const auto score = hi - lo;
        if (score > best) {
            best = score;
            run_begin = run_end = c;
            in_run = true;
        } else if (score == best && in_run && run_end == c - kStep) {
            run_end = c;
        } else {
            in_run = false;
        }
    }
    const double period_s = static_cast<double>(run_begin + run_end) / 2.0 * 1e-6;
    return 60.0 / (period_s * blades);
}

// --- scenarios -------------------------------------------------------------

namespace {

MotionKind parse_kind(const std::string& s) {
    if (s == "constant_velocity") return MotionKind::ConstantVelocity;
    if (s == "circular") return MotionKind::Circular;
    if (s == "sinusoidal") return MotionKind::Sinusoidal;
    if (s == "random_accel") return MotionKind::RandomAccel;
    throw ValidationError("unknown motion.kind '" + s + "'");
}

std::vector<std::pair<double, double>> parse_pairs(const std::string& key, const std::string& s) {
    std::vector<std::pair<double, double>> out;
    for (auto item : text::split(s, ',')) {
        const auto parts = text::split(item, ':');
        const auto a = parts.size() == 2 ? text::parse_double(parts[0]) : std::nullopt;
        const auto b = parts.size() == 2 ? text::parse_double(parts[1]) : std::nullopt;
        if (!a || !b) throw ValidationError("key '" + key + "' expects a:b,c:d pairs, got '" + s + "'");
        out.emplace_back(*a, *b);
    }
    return out;
}

}  // namespace

Scenario parse_scenario(std::string_view input) {
    KeyValues kv = KeyValues::parse(input);
    Scenario sc;
    if (auto g = kv.take_string("geometry")) {
        const auto parts = text::split(*g, 'x');
        const auto w = parts.size() == 2 ? text::parse_int(parts[0]) : std::nullopt;
        const auto h = parts.size() == 2 ? text::parse_int(parts[1]) : std::nullopt;
        if (!w || !h || *w <= 0 || *h <= 0) throw ValidationError("geometry expects WIDTHxHEIGHT, got '" + *g + "'");
        sc.geometry = {static_cast<std::uint32_t>(*w), static_cast<std::uint32_t>(*h)};
    }
    sc.geometry.validate();
    sc.duration_s = kv.take_double("duration_s", sc.duration_s);
    sc.fps = kv.take_double("fps", sc.fps);
    sc.seed = static_cast<std::uint64_t>(kv.take_int("seed", 0));
    sc.track_id = static_cast<int>(kv.take_int("track_id", 0));
    sc.box.w = kv.take_double("box.w", sc.box.w);
    sc.box.h = kv.take_double("box.h", sc.box.h);

    MotionProfile& m = sc.motion;
    m.kind = parse_kind(kv.take_string("motion.kind", "constant_velocity"));
    m.start = {kv.take_double("motion.start_x", sc.geometry.width / 2.0),
               kv.take_double("motion.start_y", sc.geometry.height / 2.0)};
    m.velocity = {kv.take_double("motion.vx", 0.0), kv.take_double("motion.vy", 0.0)};
    m.radius_px = kv.take_double("motion.radius", m.radius_px);
    m.frequency_hz = kv.take_double("motion.freq_hz", m.frequency_hz);
    m.amplitude = {kv.take_double("motion.amp_x", 0.0), kv.take_double("motion.amp_y", 0.0)};
    m.accel_std = kv.take_double("motion.accel_std", m.accel_std);
    m.burst_accel_std = kv.take_double("motion.burst_accel_std", m.burst_accel_std);
    m.accel_hold_s = kv.take_double("motion.accel_hold_s", m.accel_hold_s);
    m.margin_px = kv.take_double("motion.margin_px", m.margin_px);
    m.seed = derive_seed(sc.seed, kMotion);
    if (auto b = kv.take_string("motion.bursts")) {
        for (const auto& [s, e] : parse_pairs("motion.bursts", *b)) {
            if (!(e > s)) throw ValidationError("motion.bursts entries need end > start");
            m.bursts.push_back({s, e});
        }
    }
    const auto burst_count = kv.take_int("motion.burst_count", 0);
    const double burst_duration = kv.take_double("motion.burst_duration_s", 0.8);
    if (burst_count > 0) {
        if (!m.bursts.empty()) throw ValidationError("motion.bursts and motion.burst_count are exclusive");
        m.bursts = random_bursts(static_cast<int>(burst_count), burst_duration, sc.duration_s,
                                 derive_seed(sc.seed, kBursts));
    }

    sc.propeller_offset = {kv.take_double("propeller.offset_x", 0.0), kv.take_double("propeller.offset_y", 0.0)};
    sc.blade_length_px = kv.take_double("propeller.blade_length", sc.blade_length_px);
    sc.blades = static_cast<int>(kv.take_int("propeller.blades", sc.blades));
    sc.blade_width_rad = kv.take_double("propeller.blade_width_rad", sc.blade_width_rad);
    sc.hub_radius_px = kv.take_double("propeller.hub_radius", sc.hub_radius_px);
    const auto rpm = kv.take_double("propeller.rpm");
    const auto profile = kv.take_string("propeller.rpm_profile");
    if (rpm && profile) throw ValidationError("propeller.rpm and propeller.rpm_profile are exclusive");
    if (rpm) sc.rpm = RpmProfile::constant(*rpm);
    if (profile) sc.rpm = RpmProfile::steps(parse_pairs("propeller.rpm_profile", *profile));
    sc.surge_rpm = kv.take_double("propeller.surge_rpm", 0.0);

    sc.noise_rate = kv.take_double("noise.rate", 0.0);
    sc.airframe_rate = kv.take_double("noise.airframe_rate", 0.0);
    sc.jitter_us = kv.take_int("noise.jitter_us", 0);
    sc.annotation_noise_px = kv.take_double("noise.annotation_px", 0.0);
    kv.reject_unconsumed();

    if (!(sc.duration_s > 0.0)) throw ValidationError("duration_s must be positive");
    if (!(sc.fps > 0.0)) throw ValidationError("fps must be positive");
    if (sc.noise_rate < 0.0 || sc.airframe_rate < 0.0 || sc.jitter_us < 0 || sc.annotation_noise_px < 0.0) {
        throw ValidationError("noise parameters must be non-negative");
    }
    return sc;
}

ScenarioOutput generate_scenario(const Scenario& sc) {
    TrackOptions opts;
    opts.fps = sc.fps;
    opts.box = sc.box;
    opts.track_id = sc.track_id;
    opts.annotation_noise_px = sc.annotation_noise_px;
    opts.noise_seed = derive_seed(sc.seed, kAnnotation);
    SimulatedTrack track = simulate_track(sc.motion, sc.duration_s, opts, sc.geometry);

    RpmProfile rpm = sc.rpm;
    if (sc.surge_rpm > 0.0 && !sc.motion.bursts.empty()) {
        if (sc.rpm.segments().size() != 1) {
            throw ValidationError("propeller.surge_rpm needs a constant base rpm");
        }
        const double base = sc.rpm.segments().front().second;
        std::vector<std::pair<double, double>> steps{{0.0, base}};
        for (const Burst& b : sc.motion.bursts) {
            if (b.t_start_s <= steps.back().first) throw ValidationError("motion bursts must be ordered");
            steps.emplace_back(b.t_start_s, sc.surge_rpm);
            steps.emplace_back(b.t_end_s, base);
        }
        rpm = RpmProfile::steps(steps);
    }

    const Micros duration_us = to_micros(sc.duration_s);
    const Point2 origin = track.path.at(0.0);
    PropellerSpec prop;
    prop.center = {origin.x + sc.propeller_offset.x, origin.y + sc.propeller_offset.y};
    prop.blade_length_px = sc.blade_length_px;
    prop.blades = sc.blades;
    prop.blade_width_rad = sc.blade_width_rad;
    prop.hub_radius_px = sc.hub_radius_px;
    prop.rpm = rpm;
    prop.jitter_us = sc.jitter_us;
    prop.seed = derive_seed(sc.seed, kJitter);
    EventStream drone_frame = simulate_propeller_events(prop, sc.duration_s, sc.geometry);

    const BoundingBoxObservation origin_box{0, sc.track_id, origin.x - sc.box.w / 2.0,
                                            origin.y - sc.box.h / 2.0, sc.box.w, sc.box.h, false};
    drone_frame = add_noise_events(drone_frame, sc.airframe_rate, derive_seed(sc.seed, kAirframe),
                                   {origin_box.pixel_rect(sc.geometry), 0, duration_us});

    // Move drone-frame events with the rounded center offset at their timestamp.
    const auto ox = std::llround(origin.x);
    const auto oy = std::llround(origin.y);
    std::vector<Event> moved;
    moved.reserve(drone_frame.size());
    for (const Event& e : drone_frame.events()) {
        const Point2 c = track.path.at(static_cast<double>(e.t) / 1e6);
        const auto x = e.x + (std::llround(c.x) - ox);
        const auto y = e.y + (std::llround(c.y) - oy);
        if (!sc.geometry.contains(x, y)) continue;
        moved.push_back({e.t, static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y), e.polarity});
    }
    EventStream events(sc.geometry, std::move(moved));
    events = add_noise_events(events, sc.noise_rate, derive_seed(sc.seed, kSensorNoise),
                              {std::nullopt, 0, duration_us});
    return {std::move(events), std::move(track), std::move(rpm)};
}

Scenario maneuver_benchmark_scenario(std::uint64_t seed) {
    Scenario sc;
    sc.seed = seed;
    sc.duration_s = 12.0;
    sc.fps = 30.0;
    sc.box = {48.0, 36.0};
    MotionProfile& m = sc.motion;
    m.kind = MotionKind::RandomAccel;
    m.start = {640.0, 360.0};
    m.accel_std = 5.0;
    m.burst_accel_std = 200.0;
    m.accel_hold_s = 0.2;
    m.margin_px = 100.0;
    m.seed = derive_seed(seed, kMotion);
    m.bursts = random_bursts(4, 0.8, sc.duration_s, derive_seed(seed, kBursts));
    sc.blade_length_px = 8.0;
    sc.blades = 2;
    sc.rpm = RpmProfile::constant(5000.0);
    sc.surge_rpm = 14000.0;
    sc.airframe_rate = 40.0;
    sc.annotation_noise_px = 3.0;
    return sc;
}

}  // namespace propcast::synth
