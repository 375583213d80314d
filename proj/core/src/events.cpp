#include "propcast/events.hpp"

#include <algorithm>
#include <string>

namespace propcast {

void SensorGeometry::validate() const {
    if (width == 0 || height == 0) {
        throw ValidationError("sensor geometry must be non-empty, got " + std::to_string(width) +
                              "x" + std::to_string(height));
    }
    if (width > 65535 || height > 65535) {
        throw ValidationError("sensor geometry exceeds 16-bit pixel coordinates");
    }
}

PixelRect BoundingBoxObservation::pixel_rect(const SensorGeometry& geometry) const noexcept {
    PixelRect r;
    r.x0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(x_min)));
    r.y0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(y_min)));
    r.x1 = std::min<std::int64_t>(geometry.width - 1,
                                  static_cast<std::int64_t>(std::floor(x_min + w)));
    r.y1 = std::min<std::int64_t>(geometry.height - 1,
                                  static_cast<std::int64_t>(std::floor(y_min + h)));
    return r;
}

BoundingBoxObservation clamp_to(BoundingBoxObservation box, const SensorGeometry& geometry) {
    const double max_x = static_cast<double>(geometry.width - 1);
    const double max_y = static_cast<double>(geometry.height - 1);
    const double x0 = std::clamp(box.x_min, 0.0, max_x);
    const double y0 = std::clamp(box.y_min, 0.0, max_y);
    const double x1 = std::clamp(box.x_min + box.w, 0.0, max_x);
    const double y1 = std::clamp(box.y_min + box.h, 0.0, max_y);
    if (x1 <= x0 || y1 <= y0) {
        throw ValidationError("box of track " + std::to_string(box.track_id) + " at t=" +
                              std::to_string(box.t) + " lies outside the sensor");
    }
    if (x0 != box.x_min || y0 != box.y_min || x1 - x0 != box.w || y1 - y0 != box.h) {
        box.clamped = true;
        box.x_min = x0;
        box.y_min = y0;
        box.w = x1 - x0;
        box.h = y1 - y0;
    }
    return box;
}

EventStream::EventStream(SensorGeometry geometry, std::vector<Event> events)
    : geometry_(geometry) {
    geometry_.validate();
    for (std::size_t i = 0; i < events.size(); ++i) {
        const Event& e = events[i];
        if (e.t < 0) {
            throw ValidationError("event " + std::to_string(i) + " has a negative timestamp");
        }
        if (!geometry_.contains(e.x, e.y)) {
            throw ValidationError("event " + std::to_string(i) + " at (" + std::to_string(e.x) +
                                  "," + std::to_string(e.y) + ") is outside the sensor");
        }
        if (i > 0 && e.t < events[i - 1].t) {
            throw ValidationError("event " + std::to_string(i) + " timestamp " +
                                  std::to_string(e.t) + " precedes " +
                                  std::to_string(events[i - 1].t));
        }
    }
    events_ = std::make_shared<const std::vector<Event>>(std::move(events));
}

std::span<const Event> EventStream::slice(Micros t_start, Micros t_end) const noexcept {
    const auto& ev = *events_;
    if (t_end <= t_start) return {};
    const auto by_time = [](const Event& e, Micros t) { return e.t < t; };
    const auto first = std::lower_bound(ev.begin(), ev.end(), t_start, by_time);
    const auto last = std::lower_bound(first, ev.end(), t_end, by_time);
    return {first, last};
}

std::vector<Event> window_events(const EventStream& stream, Micros t_start, Micros t_end,
                                 const BoundingBoxObservation& box) {
    std::vector<Event> out;
    const PixelRect rect = box.pixel_rect(stream.geometry());
    for_each_in_window(stream, t_start, t_end, rect, [&](const Event& e) { out.push_back(e); });
    return out;
}

std::vector<BoundingBoxObservation> select_track(std::span<const BoundingBoxObservation> boxes,
                                                 int track_id) {
    std::vector<BoundingBoxObservation> out;
    for (const auto& b : boxes) {
        if (b.track_id == track_id) out.push_back(b);
    }
    return out;
}

}  // namespace propcast
