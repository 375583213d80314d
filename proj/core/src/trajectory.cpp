#include "propcast/trajectory.hpp"

#include <cmath>
#include <map>

#include "propcast/text.hpp"

namespace propcast {

void validate_trajectory(const Trajectory& trajectory) {
    for (std::size_t i = 0; i < trajectory.size(); ++i) {
        const auto& p = trajectory[i];
        if (!std::isfinite(p.cx) || !std::isfinite(p.cy)) {
            throw ValidationError("trajectory point " + std::to_string(i) + " is not finite");
        }
        if (i > 0 && p.t <= trajectory[i - 1].t) {
            throw ValidationError("trajectory timestamps must strictly increase at point " +
                                  std::to_string(i));
        }
    }
}

std::string write_forecast_csv(std::span<const Emission> emissions) {
    std::string out(kForecastCsvHeader);
    out.push_back('\n');
    for (const auto& em : emissions) {
        for (const auto& p : em.poses) {
            text::append_int(out, em.t_emit);
            out.push_back(',');
            text::append_double(out, em.horizon_s);
            out.push_back(',');
            text::append_int(out, p.t);
            out.push_back(',');
            text::append_double(out, p.cx);
            out.push_back(',');
            text::append_double(out, p.cy);
            out.push_back('\n');
        }
    }
    return out;
}

std::vector<Emission> parse_forecast_csv(std::string_view csv) {
    text::LineReader lines(csv);
    const auto header = lines.next();
    if (!header || text::trim(*header) != kForecastCsvHeader) {
        throw ParseError("forecast csv: expected header '" + std::string(kForecastCsvHeader) +
                             "' (line 1)",
                         1);
    }
    std::vector<Emission> out;
    std::map<std::pair<Micros, double>, std::size_t> index;
    while (auto line = lines.next()) {
        const auto n = lines.line_number();
        if (text::trim(*line).empty()) continue;
        const auto f = text::split(*line, ',');
        const auto bad = [n] {
            return ParseError("forecast csv: malformed row (line " + std::to_string(n) + ")", n);
        };
        if (f.size() != 5) throw bad();
        const auto t_emit = text::parse_int(f[0]);
        const auto horizon = text::parse_double(f[1]);
        const auto t_pred = text::parse_int(f[2]);
        const auto cx = text::parse_double(f[3]);
        const auto cy = text::parse_double(f[4]);
        if (!t_emit || !horizon || !t_pred || !cx || !cy || *horizon <= 0.0) throw bad();
        const auto key = std::make_pair(*t_emit, *horizon);
        auto it = index.find(key);
        if (it == index.end()) {
            it = index.emplace(key, out.size()).first;
            out.push_back(Emission{*t_emit, *horizon, {}});
        }
        auto& poses = out[it->second].poses;
        if (!poses.empty() && *t_pred <= poses.back().t) {
            throw ParseError("forecast csv: prediction times must increase within an emission (line " +
                                 std::to_string(n) + ")",
                             n);
        }
        poses.push_back({*t_pred, *cx, *cy});
    }
    return out;
}

std::string write_trajectory_csv(const Trajectory& trajectory) {
    std::string out(kTrajectoryCsvHeader);
    out.push_back('\n');
    for (const auto& p : trajectory) {
        text::append_int(out, p.t);
        out.push_back(',');
        text::append_double(out, p.cx);
        out.push_back(',');
        text::append_double(out, p.cy);
        out.push_back('\n');
    }
    return out;
}

Trajectory parse_trajectory_csv(std::string_view csv) {
    text::LineReader lines(csv);
    const auto header = lines.next();
    if (!header || text::trim(*header) != kTrajectoryCsvHeader) {
        throw ParseError("trajectory csv: expected header '" + std::string(kTrajectoryCsvHeader) +
                             "' (line 1)",
                         1);
    }
    Trajectory out;
    while (auto line = lines.next()) {
        const auto n = lines.line_number();
        if (text::trim(*line).empty()) continue;
        const auto f = text::split(*line, ',');
        if (f.size() != 3) {
            throw ParseError("trajectory csv: expected 3 fields (line " + std::to_string(n) + ")", n);
        }
        const auto t = text::parse_int(f[0]);
        const auto cx = text::parse_double(f[1]);
        const auto cy = text::parse_double(f[2]);
        if (!t || !cx || !cy) {
            throw ParseError("trajectory csv: malformed row (line " + std::to_string(n) + ")", n);
        }
        if (!out.empty() && *t <= out.back().t) {
            throw ParseError("trajectory csv: timestamps must strictly increase (line " +
                                 std::to_string(n) + ")",
                             n);
        }
        out.push_back({*t, *cx, *cy});
    }
    return out;
}

Trajectory centers_of(std::span<const BoundingBoxObservation> track) {
    Trajectory out;
    out.reserve(track.size());
    for (const auto& b : track) {
        const Point2 c = b.center();
        out.push_back({b.t, c.x, c.y});
    }
    return out;
}

}  // namespace propcast
