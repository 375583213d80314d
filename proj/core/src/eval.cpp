#include "propcast/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "propcast/text.hpp"

namespace propcast::eval {
namespace {

void check_pair(const Trajectory& pred, const Trajectory& gt, Micros tolerance_us) {
    if (pred.empty() || gt.empty()) throw ValidationError("metric on an empty trajectory");
    if (pred.size() != gt.size()) {
        throw ValidationError("metric on trajectories of different length (" +
                              std::to_string(pred.size()) + " vs " + std::to_string(gt.size()) + ")");
    }
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (std::llabs(pred[i].t - gt[i].t) > tolerance_us) {
            throw ValidationError("prediction and ground-truth grids differ at point " +
                                  std::to_string(i));
        }
    }
}

double distance(const TrajectoryPoint& a, const TrajectoryPoint& b) {
    return std::hypot(a.cx - b.cx, a.cy - b.cy);
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double ade(const Trajectory& pred, const Trajectory& gt, Micros tolerance_us) {
    check_pair(pred, gt, tolerance_us);
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) sum += distance(pred[i], gt[i]);
    return sum / static_cast<double>(pred.size());
}

double fde(const Trajectory& pred, const Trajectory& gt, Micros tolerance_us) {
    check_pair(pred, gt, tolerance_us);
    return distance(pred.back(), gt.back());
}

GroundTruth nearest_sample(Trajectory samples, Micros tolerance_us) {
    validate_trajectory(samples);
    return [samples = std::move(samples), tolerance_us](Micros t) -> std::optional<Point2> {
        const auto it = std::lower_bound(samples.begin(), samples.end(), t,
                                         [](const TrajectoryPoint& p, Micros v) { return p.t < v; });
        const TrajectoryPoint* best = nullptr;
        if (it != samples.end()) best = &*it;
        if (it != samples.begin()) {
            const auto& prev = *std::prev(it);
            if (!best || t - prev.t <= best->t - t) best = &prev;
        }
        if (!best || std::llabs(best->t - t) > tolerance_us) return std::nullopt;
        return Point2{best->cx, best->cy};
    };
}

std::optional<Trajectory> align(const Trajectory& pred, const GroundTruth& gt) {
    Trajectory out;
    out.reserve(pred.size());
    for (const auto& p : pred) {
        const auto c = gt(p.t);
        if (!c) return std::nullopt;
        out.push_back({p.t, c->x, c->y});
    }
    return out;
}

double HorizonResult::mean_ade() const { return mean_of(ade); }
double HorizonResult::mean_fde() const { return mean_of(fde); }

const HorizonResult* SequenceResult::find(double horizon_s) const {
    for (const auto& h : horizons) {
        if (std::abs(h.horizon_s - horizon_s) < 1e-9) return &h;
    }
    return nullptr;
}

SequenceResult evaluate_sequence(std::string sequence_id, std::span<const Emission> emissions,
                                 const GroundTruth& gt) {
    SequenceResult result;
    result.sequence_id = std::move(sequence_id);
    std::map<double, HorizonResult> by_horizon;
    for (const auto& em : emissions) {
        const auto truth = em.poses.empty() ? std::nullopt : align(em.poses, gt);
        if (!truth) {
            ++result.skipped;
            continue;
        }
        auto& h = by_horizon[em.horizon_s];
        h.horizon_s = em.horizon_s;
        // align() copies the prediction timestamps, so no grid tolerance is needed.
        h.ade.push_back(ade(em.poses, *truth, 0));
        h.fde.push_back(fde(em.poses, *truth, 0));
    }
    if (by_horizon.empty()) {
        throw ValidationError("sequence " + result.sequence_id + ": no emission could be evaluated");
    }
    for (auto& [_, h] : by_horizon) result.horizons.push_back(std::move(h));
    return result;
}

double percentile(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw ValidationError("percentile of an empty set");
    const double pos = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

Stats summarize(std::vector<double> values) {
    if (values.empty()) throw ValidationError("statistics of an empty set");
    std::sort(values.begin(), values.end());
    Stats s;
    s.mean = mean_of(values);
    s.median = percentile(values, 50);
    s.p5 = percentile(values, 5);
    s.p25 = percentile(values, 25);
    s.p75 = percentile(values, 75);
    s.p95 = percentile(values, 95);
    return s;
}

std::vector<AggregateRow> aggregate(std::span<const SequenceResult> results) {
    if (results.empty()) throw ValidationError("aggregate of no sequences");
    struct Bucket {
        std::vector<double> per_sequence;
        std::vector<double> pooled;
    };
    std::map<std::pair<std::string, double>, Bucket> buckets;
    for (const auto& r : results) {
        for (const auto& h : r.horizons) {
            auto& a = buckets[{"ADE", h.horizon_s}];
            a.per_sequence.push_back(h.mean_ade());
            a.pooled.insert(a.pooled.end(), h.ade.begin(), h.ade.end());
            auto& f = buckets[{"FDE", h.horizon_s}];
            f.per_sequence.push_back(h.mean_fde());
            f.pooled.insert(f.pooled.end(), h.fde.begin(), h.fde.end());
        }
    }
    std::vector<AggregateRow> rows;
    for (const auto& [key, b] : buckets) {
        rows.push_back({key.first, key.second, summarize(b.per_sequence)});
    }
    for (const auto& [key, b] : buckets) {
        rows.push_back({key.first + "_pooled", key.second, summarize(b.pooled)});
    }
    return rows;
}

std::string write_results_csv(std::span<const SequenceResult> results) {
    std::string out(kResultsCsvHeader);
    out.push_back('\n');
    const auto row = [&out](const std::string& id, std::string_view metric, double h, double v) {
        out += id;
        out.push_back(',');
        out.append(metric);
        out.push_back(',');
        text::append_double(out, h);
        out.push_back(',');
        text::append_double(out, v);
        out.push_back('\n');
    };
    for (const auto& r : results) {
        for (const auto& h : r.horizons) row(r.sequence_id, "ADE", h.horizon_s, h.mean_ade());
        for (const auto& h : r.horizons) row(r.sequence_id, "FDE", h.horizon_s, h.mean_fde());
    }
    return out;
}

std::string write_aggregate_csv(std::span<const AggregateRow> rows) {
    std::string out(kAggregateCsvHeader);
    out.push_back('\n');
    for (const auto& r : rows) {
        out += r.metric;
        for (double v : {r.horizon_s, r.stats.mean, r.stats.median, r.stats.p5, r.stats.p25,
                         r.stats.p75, r.stats.p95}) {
            out.push_back(',');
            text::append_double(out, v);
        }
        out.push_back('\n');
    }
    return out;
}

std::string write_comparison_csv(std::span<const MethodAggregate> methods) {
    std::string out(kComparisonCsvHeader);
    out.push_back('\n');
    for (const auto& [name, rows] : methods) {
        for (const std::string_view metric : {"ADE", "FDE"}) {
            for (const auto& r : rows) {
                if (r.metric != metric) continue;
                out += name;
                out.push_back(',');
                out += r.metric;
                out.push_back(',');
                text::append_double(out, r.horizon_s);
                out.push_back(',');
                text::append_double(out, r.stats.mean);
                out.push_back('\n');
            }
        }
    }
    return out;
}

std::string boxplot_svg(std::span<const MethodAggregate> methods) {
    struct Box {
        std::string label;
        Stats s;
    };
    std::vector<Box> boxes;
    double max_v = 0.0;
    for (const auto& [name, rows] : methods) {
        for (const auto& r : rows) {
            if (r.metric.find("_pooled") != std::string::npos) continue;
            boxes.push_back({name + " " + r.metric + "@" + text::format_double(r.horizon_s) + "s", r.stats});
            max_v = std::max(max_v, r.stats.p95);
        }
    }
    const double col = 60.0, plot_h = 300.0, top = 20.0;
    const double width = col * static_cast<double>(boxes.size() + 1);
    const auto y_of = [&](double v) { return top + plot_h - (max_v > 0 ? v / max_v * plot_h : 0.0); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << plot_h + 2 * top + 120 << "\">\n";
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        const auto& b = boxes[i];
        const double cx = col * (static_cast<double>(i) + 1.0);
        svg << "<line x1=\"" << cx << "\" y1=\"" << y_of(b.s.p5) << "\" x2=\"" << cx << "\" y2=\""
            << y_of(b.s.p95) << "\" stroke=\"black\"/>\n";
        svg << "<rect x=\"" << cx - 15 << "\" y=\"" << y_of(b.s.p75) << "\" width=\"30\" height=\""
            << y_of(b.s.p25) - y_of(b.s.p75) << "\" fill=\"white\" stroke=\"black\"/>\n";
        svg << "<line x1=\"" << cx - 15 << "\" y1=\"" << y_of(b.s.median) << "\" x2=\"" << cx + 15
            << "\" y2=\"" << y_of(b.s.median) << "\" stroke=\"orange\"/>\n";
        svg << "<text x=\"" << cx << "\" y=\"" << top + plot_h + 10
            << "\" font-size=\"9\" transform=\"rotate(60 " << cx << " " << top + plot_h + 10
            << ")\">" << b.label << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

std::string trajectory_svg(const Trajectory& ground_truth, std::span<const Emission> emissions,
                           double width_px, double height_px) {
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_px << "\" height=\""
        << height_px << "\">\n";
    const auto polyline = [&svg](const Trajectory& t, std::string_view colour) {
        svg << "<polyline fill=\"none\" stroke=\"" << colour << "\" points=\"";
        for (const auto& p : t) svg << p.cx << "," << p.cy << " ";
        svg << "\"/>\n";
    };
    polyline(ground_truth, "green");
    for (const auto& em : emissions) polyline(em.poses, "orange");
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace propcast::eval
