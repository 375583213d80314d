#include "propcast/rpm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "propcast/text.hpp"

namespace propcast::rpm {

void RpmConfig::validate() const {
    if (!(percentile > 0.0 && percentile < 100.0)) {
        throw ValidationError("rpm percentile must lie in (0, 100), got " +
                              text::format_double(percentile));
    }
    if (blades < 1) throw ValidationError("blade count must be at least 1");
    if (window_us <= 0) throw ValidationError("frequency-map window must be positive");
}

// --- FrequencyMap ----------------------------------------------------------

FrequencyMap::FrequencyMap(PixelRect rect) { reset(rect); }

void FrequencyMap::reset(PixelRect rect) {
    rect_ = rect;
    counts_.assign(rect.area(), 0);
}

std::uint64_t FrequencyMap::total() const noexcept {
    return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

FrequencyMap build_frequency_map(std::span<const Event> events, const BoundingBoxObservation& box,
                                 const SensorGeometry& geometry) {
    FrequencyMap map(box.pixel_rect(geometry));
    for (const Event& e : events) map.add(e.x, e.y);
    return map;
}

// --- PixelMask -------------------------------------------------------------

PixelMask::PixelMask(PixelRect rect) : rect_(rect), bits_(rect.area(), 0) {}

void PixelMask::insert(std::int64_t x, std::int64_t y) noexcept {
    if (!rect_.contains(x, y)) return;
    auto& bit = bits_[rect_.offset(x, y)];
    if (bit == 0) {
        bit = 1;
        ++size_;
    }
}

std::vector<std::pair<std::int64_t, std::int64_t>> PixelMask::pixels() const {
    std::vector<std::pair<std::int64_t, std::int64_t>> out;
    out.reserve(size_);
    for (std::int64_t y = rect_.y0; y <= rect_.y1; ++y) {
        for (std::int64_t x = rect_.x0; x <= rect_.x1; ++x) {
            if (bits_[rect_.offset(x, y)] != 0) out.emplace_back(x, y);
        }
    }
    return out;
}

std::optional<std::uint32_t> nearest_rank(std::vector<std::uint32_t> values, double percentile) {
    if (values.empty()) return std::nullopt;
    const auto n = values.size();
    auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * static_cast<double>(n)));
    rank = std::clamp<std::size_t>(rank, 1, n);
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(rank - 1),
                     values.end());
    return values[rank - 1];
}

PixelMask threshold_propeller_pixels(const FrequencyMap& map, double percentile) {
    PixelMask mask(map.rect());
    std::vector<std::uint32_t> nonzero;
    for (auto c : map.counts()) {
        if (c > 0) nonzero.push_back(c);
    }
    const auto threshold = nearest_rank(std::move(nonzero), percentile);
    if (!threshold) return mask;
    const PixelRect& r = map.rect();
    for (std::int64_t y = r.y0; y <= r.y1; ++y) {
        for (std::int64_t x = r.x0; x <= r.x1; ++x) {
            if (map.count(x, y) >= *threshold) mask.insert(x, y);
        }
    }
    return mask;
}

// --- TransitionState -------------------------------------------------------

TransitionState::TransitionState(SensorGeometry geometry)
    : geometry_(geometry),
      on_(geometry.pixel_count(), kNone),
      off_(geometry.pixel_count(), kNone) {}

std::optional<Period> TransitionState::record(const Event& e) noexcept {
    const std::size_t i = geometry_.index(e.x, e.y);
    if (e.polarity == Polarity::Off) {
        off_[i] = e.t;
        return std::nullopt;
    }
    on_[i] = e.t;
    if (off_[i] == kNone) return std::nullopt;
    return Period{e.t - off_[i]};
}

void TransitionState::clear(std::int64_t x, std::int64_t y) noexcept {
    if (!geometry_.contains(x, y)) return;
    const std::size_t i = geometry_.index(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y));
    on_[i] = kNone;
    off_[i] = kNone;
}

std::optional<Micros> TransitionState::last_on(std::int64_t x, std::int64_t y) const noexcept {
    if (!geometry_.contains(x, y)) return std::nullopt;
    const Micros v = on_[geometry_.index(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y))];
    return v == kNone ? std::nullopt : std::optional<Micros>(v);
}

std::optional<Micros> TransitionState::last_off(std::int64_t x, std::int64_t y) const noexcept {
    if (!geometry_.contains(x, y)) return std::nullopt;
    const Micros v = off_[geometry_.index(static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y))];
    return v == kNone ? std::nullopt : std::optional<Micros>(v);
}

// --- PeriodHistogram -------------------------------------------------------

std::optional<std::size_t> PeriodHistogram::bin_index(Period p) noexcept {
    if (p.us < 0 || p.us >= kHistogramRangeUs) return std::nullopt;
    return static_cast<std::size_t>(p.us / kBinWidthUs);
}

bool PeriodHistogram::insert(Period p, Micros now) {
    const auto bin = bin_index(p);
    if (!bin) return false;
    ++bins_[*bin];
    ++total_;
    queue_.push_back({now, static_cast<std::uint16_t>(*bin)});
    evict(now);
    return true;
}

void PeriodHistogram::evict(Micros now) {
    const Micros cutoff = now - retention_us_;
    while (!queue_.empty() && queue_.front().t < cutoff) {
        --bins_[queue_.front().bin];
        --total_;
        queue_.pop_front();
    }
}

void PeriodHistogram::clear() {
    bins_.fill(0);
    queue_.clear();
    total_ = 0;
}

std::optional<DominantBin> dominant_bin(const PeriodHistogram& h) noexcept {
    if (h.total() == 0) return std::nullopt;
    DominantBin best;
    for (std::size_t b = 0; b < kBinCount; ++b) {
        if (h[b] > best.support) {
            best = {b, h[b], false};
        } else if (h[b] == best.support && best.support > 0) {
            best.tied = true;
        }
    }
    return best;
}

std::optional<double> estimate_dominant_period(const PeriodHistogram& h,
                                               std::uint32_t min_support) {
    const auto best = dominant_bin(h);
    if (!best || best->support < std::max<std::uint32_t>(min_support, 1)) return std::nullopt;
    return PeriodHistogram::bin_center_ms(best->bin);
}

double period_to_rpm(double period_ms, int blades) {
    if (!(period_ms > 0.0) || !std::isfinite(period_ms)) {
        throw ValidationError("period must be positive, got " + text::format_double(period_ms));
    }
    if (blades < 1) throw ValidationError("blade count must be at least 1");
    return (1000.0 / period_ms) * 60.0 / static_cast<double>(blades);
}

double rpm_to_period_ms(double rpm, int blades) {
    if (!(rpm > 0.0) || !std::isfinite(rpm)) {
        throw ValidationError("rpm must be positive, got " + text::format_double(rpm));
    }
    if (blades < 1) throw ValidationError("blade count must be at least 1");
    return 60'000.0 / (rpm * static_cast<double>(blades));
}

// --- RpmEstimator ----------------------------------------------------------

RpmEstimator::RpmEstimator(EventStream stream, RpmConfig config)
    : stream_(std::move(stream)),
      config_(config),
      transitions_(stream_.geometry()),
      histogram_(kRetentionUs) {
    config_.validate();
}

RpmEstimate RpmEstimator::update(const BoundingBoxObservation& box) {
    const Micros t = box.t;
    if (processed_until_ && t < *processed_until_) {
        throw ValidationError("rpm estimator: annotation at t=" + std::to_string(t) +
                              " precedes the previous one");
    }
    const PixelRect rect = box.pixel_rect(stream_.geometry());
    const Micros window_start = t - config_.window_us;

    map_.reset(rect);
    for_each_in_window(stream_, window_start, t, rect, [&](const Event& e) { map_.add(e.x, e.y); });
    PixelMask next = threshold_propeller_pixels(map_, config_.percentile);

    // Pixels dropping out of the mask forget their transitions.
    for (const auto& [x, y] : mask_.pixels()) {
        if (!next.contains(x, y)) transitions_.clear(x, y);
    }
    mask_ = std::move(next);

    const Micros from = processed_until_ ? std::max(*processed_until_, window_start) : window_start;
    for_each_in_window(stream_, from, t, rect, [&](const Event& e) {
        if (!mask_.contains(e.x, e.y)) return;
        if (const auto period = transitions_.record(e)) histogram_.insert(*period, e.t);
    });
    histogram_.evict(t);
    processed_until_ = t;

    RpmEstimate est;
    est.t = t;
    if (const auto best = dominant_bin(histogram_)) {
        est.support = best->support;
        est.tied = best->tied;
        if (best->tied) ++ties_;
        if (best->support >= std::max<std::uint32_t>(config_.min_support, 1)) {
            est.period_ms = PeriodHistogram::bin_center_ms(best->bin);
            est.rpm = period_to_rpm(est.period_ms, config_.blades);
            est.valid = true;
        }
    }
    return est;
}

std::vector<RpmEstimate> estimate_rpm_stream(const EventStream& stream,
                                             std::span<const BoundingBoxObservation> annotations,
                                             int track_id, const RpmConfig& config) {
    const auto track = select_track(annotations, track_id);
    if (track.empty()) throw UnknownTrackError(track_id);
    RpmEstimator estimator(stream, config);
    std::vector<RpmEstimate> series;
    series.reserve(track.size());
    for (const auto& box : track) series.push_back(estimator.update(box));
    return series;
}

// --- CSV -------------------------------------------------------------------

std::string write_rpm_csv(std::span<const RpmEstimate> series) {
    std::string out(kRpmCsvHeader);
    out.push_back('\n');
    for (const auto& e : series) {
        text::append_int(out, e.t);
        out.push_back(',');
        text::append_double(out, e.rpm);
        out.push_back(',');
        text::append_double(out, e.period_ms);
        out.push_back(',');
        text::append_int(out, e.support);
        out.push_back(',');
        out.push_back(e.valid ? '1' : '0');
        out.push_back('\n');
    }
    return out;
}

std::vector<RpmEstimate> parse_rpm_csv(std::string_view text) {
    text::LineReader lines(text);
    const auto header = lines.next();
    if (!header || text::trim(*header) != kRpmCsvHeader) {
        throw ParseError("rpm csv: expected header '" + std::string(kRpmCsvHeader) + "' (line 1)", 1);
    }
    std::vector<RpmEstimate> out;
    while (auto line = lines.next()) {
        const auto n = lines.line_number();
        if (text::trim(*line).empty()) continue;
        const auto f = text::split(*line, ',');
        if (f.size() != 5) throw ParseError("rpm csv: expected 5 fields (line " + std::to_string(n) + ")", n);
        const auto t = text::parse_int(f[0]);
        const auto rpm = text::parse_double(f[1]);
        const auto period = text::parse_double(f[2]);
        const auto support = text::parse_int(f[3]);
        const auto valid = text::parse_int(f[4]);
        if (!t || !rpm || !period || !support || !valid || *support < 0 || (*valid != 0 && *valid != 1)) {
            throw ParseError("rpm csv: malformed row (line " + std::to_string(n) + ")", n);
        }
        RpmEstimate e;
        e.t = *t;
        e.rpm = *rpm;
        e.period_ms = *period;
        e.support = static_cast<std::uint32_t>(*support);
        e.valid = *valid == 1;
        out.push_back(e);
    }
    return out;
}

}  // namespace propcast::rpm
