#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "propcast/trajectory.hpp"

// Displacement metrics on center points and their aggregation.
namespace propcast::eval {

/// Mean Euclidean distance over paired points. Requires equal non-empty
/// lengths and timestamps agreeing within `tolerance_us`.
double ade(const Trajectory& pred, const Trajectory& gt, Micros tolerance_us = 16'667);

/// Euclidean distance between the final points; same preconditions as ade.
double fde(const Trajectory& pred, const Trajectory& gt, Micros tolerance_us = 16'667);

/// Ground-truth center at a time, or nullopt when not available there.
using GroundTruth = std::function<std::optional<Point2>(Micros)>;

/// Lookup into sampled ground truth: the nearest sample within `tolerance_us`.
GroundTruth nearest_sample(Trajectory samples, Micros tolerance_us = 16'667);

/// Ground truth aligned to the timestamps of `pred`, or nullopt when some
/// point has no ground truth.
std::optional<Trajectory> align(const Trajectory& pred, const GroundTruth& gt);

struct HorizonResult {
    double horizon_s = 0.0;
    std::vector<double> ade;  ///< one per evaluated emission
    std::vector<double> fde;

    double mean_ade() const;
    double mean_fde() const;
};

struct SequenceResult {
    std::string sequence_id;
    std::vector<HorizonResult> horizons;  ///< ascending horizon
    std::size_t skipped = 0;              ///< emissions without full ground truth

    const HorizonResult* find(double horizon_s) const;
};

/// Per-emission ADE/FDE grouped by horizon. Emissions whose ground truth does
/// not cover every pose are skipped. Throws ValidationError when nothing
/// could be evaluated.
SequenceResult evaluate_sequence(std::string sequence_id, std::span<const Emission> emissions,
                                 const GroundTruth& gt);

struct Stats {
    double mean = 0.0;
    double median = 0.0;
    double p5 = 0.0;
    double p25 = 0.0;
    double p75 = 0.0;
    double p95 = 0.0;
};

/// Linear interpolation between order statistics at position p/100 * (n - 1).
double percentile(std::span<const double> sorted, double p);

/// Throws ValidationError for empty input.
Stats summarize(std::vector<double> values);

struct AggregateRow {
    std::string metric;  ///< "ADE", "FDE", or the pooled variants "ADE_pooled", "FDE_pooled"
    double horizon_s = 0.0;
    Stats stats;
};

/// Statistics over per-sequence mean scores, followed by the same statistics
/// over all emissions pooled across sequences.
std::vector<AggregateRow> aggregate(std::span<const SequenceResult> results);

inline constexpr std::string_view kResultsCsvHeader = "sequence_id,metric,horizon_s,value_px";
inline constexpr std::string_view kAggregateCsvHeader = "metric,horizon_s,mean,median,p5,p25,p75,p95";
inline constexpr std::string_view kComparisonCsvHeader = "method,metric,horizon_s,mean_px";

std::string write_results_csv(std::span<const SequenceResult> results);
std::string write_aggregate_csv(std::span<const AggregateRow> rows);

/// Method label plus its aggregate rows.
using MethodAggregate = std::pair<std::string, std::vector<AggregateRow>>;

/// Per-sequence-mean rows of every method, in the order given.
std::string write_comparison_csv(std::span<const MethodAggregate> methods);

/// Box (p25-p75), median line and p5-p95 whiskers per method/metric/horizon.
std::string boxplot_svg(std::span<const MethodAggregate> methods);

/// Ground-truth polyline plus forecast polylines.
std::string trajectory_svg(const Trajectory& ground_truth, std::span<const Emission> emissions,
                           double width_px = 1280, double height_px = 720);

}  // namespace propcast::eval
