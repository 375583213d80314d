#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "propcast/events.hpp"

// Propeller RPM from the per-pixel periodicity of events inside the drone box.
//
// Pipeline per annotation frame:
//   1. count events per box pixel over a trailing window (FrequencyMap),
//   2. keep pixels at or above a count percentile (PixelMask),
//   3. for masked pixels, record the gap between an ON event and the previous
//      OFF event of the same pixel (TransitionState),
//   4. bin the gaps into a 256 x 0.1 ms histogram with 100 ms FIFO retention,
//   5. take the centre of the fullest bin as the blade-passing period.
namespace propcast::rpm {

inline constexpr std::size_t kBinCount = 256;
inline constexpr Micros kBinWidthUs = 100;
inline constexpr double kBinWidthMs = 0.1;
inline constexpr Micros kHistogramRangeUs = static_cast<Micros>(kBinCount) * kBinWidthUs;
inline constexpr Micros kRetentionUs = 100'000;

/// Time between a pixel's last OFF event and its next ON event.
struct Period {
    Micros us = 0;

    double ms() const noexcept { return static_cast<double>(us) / 1000.0; }
    friend bool operator==(const Period&, const Period&) = default;
};

struct RpmConfig {
    double percentile = 70.0;      ///< tau_p, exclusive range (0, 100)
    int blades = 2;                ///< blades per propeller
    Micros window_us = 100'000;    ///< frequency-map window
    std::uint32_t min_support = 5; ///< entries the winning bin needs for a valid estimate

    void validate() const;
};

/// Event counts for the pixels of one box over one window.
class FrequencyMap {
public:
    FrequencyMap() = default;
    explicit FrequencyMap(PixelRect rect);

    /// Clears all counts and re-targets the map at `rect`, keeping capacity.
    void reset(PixelRect rect);

    void add(std::int64_t x, std::int64_t y) noexcept {
        if (rect_.contains(x, y)) ++counts_[rect_.offset(x, y)];
    }
    std::uint32_t count(std::int64_t x, std::int64_t y) const noexcept {
        return rect_.contains(x, y) ? counts_[rect_.offset(x, y)] : 0;
    }

    const PixelRect& rect() const noexcept { return rect_; }
    std::span<const std::uint32_t> counts() const noexcept { return counts_; }
    std::uint64_t total() const noexcept;

private:
    PixelRect rect_{};
    std::vector<std::uint32_t> counts_;
};

FrequencyMap build_frequency_map(std::span<const Event> events, const BoundingBoxObservation& box,
                                 const SensorGeometry& geometry = {});

/// Pixels classified as propeller, stored as a bitmap over a rectangle.
class PixelMask {
public:
    PixelMask() = default;
    explicit PixelMask(PixelRect rect);

    void insert(std::int64_t x, std::int64_t y) noexcept;
    bool contains(std::int64_t x, std::int64_t y) const noexcept {
        return rect_.contains(x, y) && bits_[rect_.offset(x, y)] != 0;
    }
    std::size_t size() const noexcept { return size_; }
    bool empty() const noexcept { return size_ == 0; }
    const PixelRect& rect() const noexcept { return rect_; }

    /// Member pixels in row-major order.
    std::vector<std::pair<std::int64_t, std::int64_t>> pixels() const;

private:
    PixelRect rect_{};
    std::vector<std::uint8_t> bits_;
    std::size_t size_ = 0;
};

/// Nearest-rank percentile: the value at rank ceil(p/100 * n) of the sorted
/// input (1-based). Empty input yields nullopt.
std::optional<std::uint32_t> nearest_rank(std::vector<std::uint32_t> values, double percentile);

/// Pixels whose count is at least the nearest-rank `percentile` of the
/// non-zero counts. An all-zero map gives an empty mask.
PixelMask threshold_propeller_pixels(const FrequencyMap& map, double percentile);

/// Last ON / OFF timestamp of every sensor pixel.
class TransitionState {
public:
    explicit TransitionState(SensorGeometry geometry = {});

    /// Updates the pixel of `e`. Returns the OFF->ON gap when `e` is ON and
    /// the pixel has a recorded OFF.
    std::optional<Period> record(const Event& e) noexcept;

    void clear(std::int64_t x, std::int64_t y) noexcept;
    std::optional<Micros> last_on(std::int64_t x, std::int64_t y) const noexcept;
    std::optional<Micros> last_off(std::int64_t x, std::int64_t y) const noexcept;

private:
    static constexpr Micros kNone = -1;
    SensorGeometry geometry_;
    std::vector<Micros> on_;
    std::vector<Micros> off_;
};

/// 256-bin histogram of periods with FIFO eviction of entries older than the
/// retention window. Invariant: sum of bins == queue length.
class PeriodHistogram {
public:
    explicit PeriodHistogram(Micros retention_us = kRetentionUs) : retention_us_(retention_us) {}

    /// Bin of `p`, or nullopt when p >= 25.6 ms.
    static std::optional<std::size_t> bin_index(Period p) noexcept;
    static double bin_center_ms(std::size_t bin) noexcept {
        return (static_cast<double>(bin) + 0.5) * kBinWidthMs;
    }

    /// Adds `p` stamped at `now`, then evicts relative to `now`. Returns
    /// false when the period is out of range and was discarded (no eviction
    /// happens in that case).
    bool insert(Period p, Micros now);

    /// Drops entries stamped before now - retention.
    void evict(Micros now);
    void clear();

    std::uint32_t operator[](std::size_t bin) const noexcept { return bins_[bin]; }
    const std::array<std::uint32_t, kBinCount>& bins() const noexcept { return bins_; }
    std::size_t total() const noexcept { return total_; }
    std::size_t queue_size() const noexcept { return queue_.size(); }
    Micros retention_us() const noexcept { return retention_us_; }

private:
    struct Entry {
        Micros t;
        std::uint16_t bin;
    };
    Micros retention_us_;
    std::array<std::uint32_t, kBinCount> bins_{};
    std::deque<Entry> queue_;
    std::size_t total_ = 0;
};

struct DominantBin {
    std::size_t bin = 0;
    std::uint32_t support = 0;
    bool tied = false;  ///< another bin has the same count
};

/// Fullest bin; ties go to the smaller index. nullopt for an empty histogram.
std::optional<DominantBin> dominant_bin(const PeriodHistogram& h) noexcept;

/// (b* + 0.5) * 0.1 ms, or nullopt when the fullest bin holds fewer than
/// `min_support` entries.
std::optional<double> estimate_dominant_period(const PeriodHistogram& h,
                                               std::uint32_t min_support = RpmConfig{}.min_support);

/// rpm = (1000 / period_ms) * 60 / blades. Throws ValidationError when
/// period_ms <= 0 or blades < 1.
double period_to_rpm(double period_ms, int blades);
double rpm_to_period_ms(double rpm, int blades);

struct RpmEstimate {
    Micros t = 0;
    double period_ms = 0.0;  ///< 0 when invalid
    double rpm = 0.0;        ///< 0 when invalid
    std::uint32_t support = 0;
    bool valid = false;
    bool tied = false;

    friend bool operator==(const RpmEstimate&, const RpmEstimate&) = default;
};

/// Streaming estimator for one track. Mutable and single-threaded, but can be
/// moved to another thread between updates.
class RpmEstimator {
public:
    RpmEstimator(EventStream stream, RpmConfig config);

    /// Consumes events up to `box.t` and returns the estimate at that time.
    /// Boxes must arrive with non-decreasing timestamps.
    RpmEstimate update(const BoundingBoxObservation& box);

    const PeriodHistogram& histogram() const noexcept { return histogram_; }
    const PixelMask& mask() const noexcept { return mask_; }
    const FrequencyMap& frequency_map() const noexcept { return map_; }
    std::size_t ties() const noexcept { return ties_; }

private:
    EventStream stream_;
    RpmConfig config_;
    FrequencyMap map_;
    PixelMask mask_;
    TransitionState transitions_;
    PeriodHistogram histogram_;
    std::optional<Micros> processed_until_;
    std::size_t ties_ = 0;
};

/// One estimate per annotation of `track_id`. Throws UnknownTrackError when
/// the track has no annotations.
std::vector<RpmEstimate> estimate_rpm_stream(const EventStream& stream,
                                             std::span<const BoundingBoxObservation> annotations,
                                             int track_id, const RpmConfig& config = {});

inline constexpr std::string_view kRpmCsvHeader = "t_us,rpm,period_ms,support,valid";
std::string write_rpm_csv(std::span<const RpmEstimate> series);
std::vector<RpmEstimate> parse_rpm_csv(std::string_view text);

}  // namespace propcast::rpm
