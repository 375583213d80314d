#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "propcast/errors.hpp"

namespace propcast {

/// Microsecond timestamps and durations.
using Micros = std::int64_t;

enum class Polarity : std::uint8_t { Off = 0, On = 1 };

/// One asynchronous brightness-change sample.
struct Event {
    Micros t = 0;
    std::uint16_t x = 0;
    std::uint16_t y = 0;
    Polarity polarity = Polarity::Off;

    friend bool operator==(const Event&, const Event&) = default;
};

struct SensorGeometry {
    std::uint32_t width = 1280;
    std::uint32_t height = 720;

    bool contains(std::int64_t x, std::int64_t y) const noexcept {
        return x >= 0 && y >= 0 && x < static_cast<std::int64_t>(width) &&
               y < static_cast<std::int64_t>(height);
    }
    std::size_t pixel_count() const noexcept { return std::size_t{width} * height; }
    std::size_t index(std::uint32_t x, std::uint32_t y) const noexcept {
        return std::size_t{y} * width + x;
    }
    void validate() const;

    friend bool operator==(const SensorGeometry&, const SensorGeometry&) = default;
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

/// Inclusive integer pixel rectangle. Empty when x1 < x0 or y1 < y0.
struct PixelRect {
    std::int64_t x0 = 0;
    std::int64_t y0 = 0;
    std::int64_t x1 = -1;
    std::int64_t y1 = -1;

    bool empty() const noexcept { return x1 < x0 || y1 < y0; }
    std::int64_t width() const noexcept { return empty() ? 0 : x1 - x0 + 1; }
    std::int64_t height() const noexcept { return empty() ? 0 : y1 - y0 + 1; }
    std::size_t area() const noexcept { return static_cast<std::size_t>(width() * height()); }
    bool contains(std::int64_t x, std::int64_t y) const noexcept {
        return x >= x0 && x <= x1 && y >= y0 && y <= y1;
    }
    /// Row-major offset of (x, y) inside the rectangle; caller checks contains().
    std::size_t offset(std::int64_t x, std::int64_t y) const noexcept {
        return static_cast<std::size_t>((y - y0) * width() + (x - x0));
    }

    friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

/// Ground-truth drone box at an annotation timestamp. Axis aligned and
/// pixel-inclusive on every edge: pixel (x, y) is inside when
/// x_min <= x <= x_min + w and y_min <= y <= y_min + h.
struct BoundingBoxObservation {
    Micros t = 0;
    int track_id = 0;
    double x_min = 0.0;
    double y_min = 0.0;
    double w = 1.0;
    double h = 1.0;
    bool clamped = false;  ///< set when the box was shrunk to fit the sensor

    Point2 center() const noexcept { return {x_min + w / 2.0, y_min + h / 2.0}; }

    bool contains(std::int64_t x, std::int64_t y) const noexcept {
        const auto fx = static_cast<double>(x);
        const auto fy = static_cast<double>(y);
        return fx >= x_min && fx <= x_min + w && fy >= y_min && fy <= y_min + h;
    }

    /// Integer pixels covered by the box, clipped to `geometry`.
    PixelRect pixel_rect(const SensorGeometry& geometry) const noexcept;

    friend bool operator==(const BoundingBoxObservation&, const BoundingBoxObservation&) = default;
};

/// Shrinks `box` so it lies inside `geometry`; sets `clamped` when anything
/// changed. Throws ValidationError if nothing of the box remains.
BoundingBoxObservation clamp_to(BoundingBoxObservation box, const SensorGeometry& geometry);

/// Time-ordered events from one sensor. Immutable once constructed; copies
/// share the underlying buffer, so a stream can be handed to several threads.
class EventStream {
public:
    EventStream() : events_(std::make_shared<const std::vector<Event>>()) {}

    /// Validates non-decreasing timestamps and pixel coordinates.
    EventStream(SensorGeometry geometry, std::vector<Event> events);

    const SensorGeometry& geometry() const noexcept { return geometry_; }
    std::span<const Event> events() const noexcept { return *events_; }
    std::size_t size() const noexcept { return events_->size(); }
    bool empty() const noexcept { return events_->empty(); }

    /// Events with t_start <= t < t_end, as a view into the stream.
    std::span<const Event> slice(Micros t_start, Micros t_end) const noexcept;

    friend bool operator==(const EventStream& a, const EventStream& b) {
        return a.geometry_ == b.geometry_ && *a.events_ == *b.events_;
    }

private:
    SensorGeometry geometry_{};
    std::shared_ptr<const std::vector<Event>> events_;
};

/// Events with t_start <= t < t_end whose pixel lies inside `box`, in stream
/// order. Requires t_start <= t_end.
std::vector<Event> window_events(const EventStream& stream, Micros t_start, Micros t_end,
                                 const BoundingBoxObservation& box);

/// Allocation-free variant of window_events for the hot path.
template <typename Visitor>
void for_each_in_window(const EventStream& stream, Micros t_start, Micros t_end,
                        const PixelRect& rect, Visitor&& visit) {
    for (const Event& e : stream.slice(t_start, t_end)) {
        if (rect.contains(e.x, e.y)) visit(e);
    }
}

/// Observations of one track, in file order.
std::vector<BoundingBoxObservation> select_track(std::span<const BoundingBoxObservation> boxes,
                                                 int track_id);

}  // namespace propcast
