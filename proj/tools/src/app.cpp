#include "propcast_app/app.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "propcast/baselines.hpp"
#include "propcast/errors.hpp"
#include "propcast/eval.hpp"
#include "propcast/event_io.hpp"
#include "propcast/synth.hpp"
#include "propcast/text.hpp"
#include "propcast/trajectory.hpp"

namespace fs = std::filesystem;

namespace propcast::app {

std::string_view method_name(Method m) {
    switch (m) {
        case Method::Proposed: return "proposed";
        case Method::VanillaKf: return "vanilla_kf";
        case Method::Linear: return "linear";
    }
    return "?";
}

Method parse_method(std::string_view name) {
    if (name == "proposed") return Method::Proposed;
    if (name == "vanilla_kf") return Method::VanillaKf;
    if (name == "linear") return Method::Linear;
    throw ValidationError("unknown method '" + std::string(name) +
                          "' (expected proposed, vanilla_kf or linear)");
}

const std::vector<ConfigKey>& config_keys() {
    static const std::vector<ConfigKey> keys = {
        {"rpm.percentile", "frequency-map percentile for propeller pixels"},
        {"rpm.blades", "blades per propeller"},
        {"rpm.window_us", "frequency-map window in microseconds"},
        {"rpm.min_support", "entries the dominant bin needs"},
        {"kalman.q_cx", "base process noise, x position"},
        {"kalman.q_cy", "base process noise, y position"},
        {"kalman.q_vx", "base process noise, x velocity"},
        {"kalman.q_vy", "base process noise, y velocity"},
        {"kalman.r_pos", "measurement position variance (px^2)"},
        {"kalman.scale_scope", "full or velocity"},
        {"kalman.p0_pos", "initial position variance"},
        {"kalman.p0_vel", "initial velocity variance"},
        {"modulation.rpm_lo", "rpm mapped to r = 0"},
        {"modulation.rpm_hi", "rpm mapped to r = 1"},
        {"modulation.rdot_scale", "r change per second mapped to r_dot = 1"},
        {"forecast.horizons", "comma-separated horizons in seconds"},
        {"forecast.step_s", "forecast step in seconds"},
        {"eval.tolerance_us", "ground-truth time matching tolerance"},
        {"method", "proposed, vanilla_kf or linear"},
        {"sensor.width", "sensor width for CSV input"},
        {"sensor.height", "sensor height for CSV input"},
        {"track", "track id"},
        {"seed", "seed recorded in the manifest"},
        {"events", "event file (CSV or binary)"},
        {"annotations", "annotation CSV"},
        {"rpm_series", "precomputed RPM series CSV for method=proposed"},
        {"out", "output directory"},
    };
    return keys;
}

void RunConfig::validate() const {
    rpm.validate();
    forecaster.validate();
    sensor.validate();
    if (eval_tolerance_us < 0) throw ValidationError("eval.tolerance_us must be non-negative");
}

std::string RunConfig::canonical() const {
    const auto& n = forecaster.noise;
    const auto& m = forecaster.modulation;
    std::string horizons;
    for (double h : forecaster.forecast.horizons) {
        if (!horizons.empty()) horizons += ',';
        text::append_double(horizons, h);
    }
    const std::map<std::string, std::string> values = {
        {"rpm.percentile", text::format_double(rpm.percentile)},
        {"rpm.blades", std::to_string(rpm.blades)},
        {"rpm.window_us", std::to_string(rpm.window_us)},
        {"rpm.min_support", std::to_string(rpm.min_support)},
        {"kalman.q_cx", text::format_double(n.q_cx)},
        {"kalman.q_cy", text::format_double(n.q_cy)},
        {"kalman.q_vx", text::format_double(n.q_vx)},
        {"kalman.q_vy", text::format_double(n.q_vy)},
        {"kalman.r_pos", text::format_double(n.r_pos)},
        {"kalman.scale_scope", n.scale_scope == kalman::ScaleScope::Full ? "full" : "velocity"},
        {"kalman.p0_pos", text::format_double(forecaster.p0_pos)},
        {"kalman.p0_vel", text::format_double(forecaster.p0_vel)},
        {"modulation.rpm_lo", text::format_double(m.rpm_lo)},
        {"modulation.rpm_hi", text::format_double(m.rpm_hi)},
        {"modulation.rdot_scale", text::format_double(m.rdot_scale)},
        {"forecast.horizons", horizons},
        {"forecast.step_s", text::format_double(forecaster.forecast.step_s)},
        {"eval.tolerance_us", std::to_string(eval_tolerance_us)},
        {"method", std::string(method_name(method))},
        {"sensor.width", std::to_string(sensor.width)},
        {"sensor.height", std::to_string(sensor.height)},
        {"track", std::to_string(track)},
        {"seed", std::to_string(seed)},
    };
    std::string out;
    for (const auto& [k, v] : values) out += k + "=" + v + "\n";
    return out;
}

namespace {

std::vector<double> parse_horizons(const std::string& s) {
    std::vector<double> out;
    for (auto part : text::split(s, ',')) {
        const auto v = text::parse_double(text::trim(part));
        if (!v) throw ValidationError("forecast.horizons: cannot parse '" + std::string(part) + "'");
        out.push_back(*v);
    }
    return out;
}

std::uint32_t take_dimension(KeyValues& kv, const std::string& key, std::uint32_t fallback) {
    const auto v = kv.take_int(key, fallback);
    if (v <= 0 || v > 65535) throw ValidationError(key + " must lie in [1, 65535]");
    return static_cast<std::uint32_t>(v);
}

}  // namespace

RunConfig load_run_config(KeyValues kv) {
    RunConfig c;
    c.rpm.percentile = kv.take_double("rpm.percentile", c.rpm.percentile);
    c.rpm.blades = static_cast<int>(kv.take_int("rpm.blades", c.rpm.blades));
    c.rpm.window_us = kv.take_int("rpm.window_us", c.rpm.window_us);
    const auto support = kv.take_int("rpm.min_support", c.rpm.min_support);
    if (support < 1 || support > 1'000'000'000) throw ValidationError("rpm.min_support must be positive");
    c.rpm.min_support = static_cast<std::uint32_t>(support);

    auto& n = c.forecaster.noise;
    n.q_cx = kv.take_double("kalman.q_cx", n.q_cx);
    n.q_cy = kv.take_double("kalman.q_cy", n.q_cy);
    n.q_vx = kv.take_double("kalman.q_vx", n.q_vx);
    n.q_vy = kv.take_double("kalman.q_vy", n.q_vy);
    n.r_pos = kv.take_double("kalman.r_pos", n.r_pos);
    const auto scope = kv.take_string("kalman.scale_scope", "full");
    if (scope == "full") {
        n.scale_scope = kalman::ScaleScope::Full;
    } else if (scope == "velocity") {
        n.scale_scope = kalman::ScaleScope::VelocityOnly;
    } else {
        throw ValidationError("kalman.scale_scope must be full or velocity, got '" + scope + "'");
    }
    c.forecaster.p0_pos = kv.take_double("kalman.p0_pos", c.forecaster.p0_pos);
    c.forecaster.p0_vel = kv.take_double("kalman.p0_vel", c.forecaster.p0_vel);

    auto& m = c.forecaster.modulation;
    m.rpm_lo = kv.take_double("modulation.rpm_lo", m.rpm_lo);
    m.rpm_hi = kv.take_double("modulation.rpm_hi", m.rpm_hi);
    m.rdot_scale = kv.take_double("modulation.rdot_scale", m.rdot_scale);

    if (auto h = kv.take_string("forecast.horizons")) c.forecaster.forecast.horizons = parse_horizons(*h);
    c.forecaster.forecast.step_s = kv.take_double("forecast.step_s", c.forecaster.forecast.step_s);
    c.eval_tolerance_us = kv.take_int("eval.tolerance_us", c.eval_tolerance_us);

    c.method = parse_method(kv.take_string("method", "proposed"));
    c.sensor.width = take_dimension(kv, "sensor.width", c.sensor.width);
    c.sensor.height = take_dimension(kv, "sensor.height", c.sensor.height);
    c.track = static_cast<int>(kv.take_int("track", 0));
    const auto seed = kv.take_int("seed", 0);
    if (seed < 0) throw ValidationError("seed must be non-negative");
    c.seed = static_cast<std::uint64_t>(seed);

    if (auto p = kv.take_string("events")) c.events = *p;
    if (auto p = kv.take_string("annotations")) c.annotations = *p;
    if (auto p = kv.take_string("rpm_series")) c.rpm_series = *p;
    if (auto p = kv.take_string("out")) c.out = *p;

    kv.reject_unconsumed();
    c.validate();
    return c;
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 computation failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += kHex[digest[i] >> 4];
        out += kHex[digest[i] & 0xF];
    }
    return out;
}

namespace {

/// Bad command-line usage; maps to exit code 2 like library input errors.
struct UsageError : Error {
    using Error::Error;
};

class Manifest {
public:
    Manifest(std::string command, fs::path dir, std::string config_text)
        : command_(std::move(command)), dir_(std::move(dir)), config_(std::move(config_text)) {}

    void write(const std::string& name, const std::string& contents) {
        write_file_atomic(dir_ / name, contents);
        files_.push_back(name + " sha256=" + sha256_hex(contents) + " bytes=" + std::to_string(contents.size()));
    }

    std::string finish() {
        std::string m = "command=" + command_ + "\n";
        m += "config_sha256=" + sha256_hex(config_) + "\n";
        for (const auto& f : files_) m += "file=" + f + "\n";
        write_file_atomic(dir_ / ("manifest_" + command_ + ".txt"), m);
        return m;
    }

private:
    std::string command_;
    fs::path dir_;
    std::string config_;
    std::vector<std::string> files_;
};

fs::path prepare_out_dir(const std::optional<fs::path>& out) {
    if (!out) throw UsageError("--out is required");
    std::error_code ec;
    fs::create_directories(*out, ec);
    if (ec || !fs::is_directory(*out)) {
        throw UsageError("cannot create output directory " + out->string());
    }
    return *out;
}

const fs::path& require(const std::optional<fs::path>& p, std::string_view flag) {
    if (!p) throw UsageError("--" + std::string(flag) + " is required");
    return *p;
}

std::vector<BoundingBoxObservation> load_track(const RunConfig& c) {
    const auto boxes = parse_annotations(read_file(require(c.annotations, "annotations")), c.sensor);
    auto track = select_track(boxes, c.track);
    if (track.empty()) throw UnknownTrackError(c.track);
    return track;
}

std::vector<rpm::RpmEstimate> rpm_series_for(const RunConfig& c,
                                             std::span<const BoundingBoxObservation> track) {
    if (c.rpm_series) return rpm::parse_rpm_csv(read_file(*c.rpm_series));
    const EventStream events = load_events(require(c.events, "events"), c.sensor);
    return rpm::estimate_rpm_stream(events, track, c.track, c.rpm);
}

// --- commands ----------------------------------------------------------

std::string cmd_simulate(const fs::path& scenario_path, std::optional<std::int64_t> seed,
                         const std::optional<fs::path>& out, bool binary) {
    KeyValues kv = KeyValues::parse(read_file(scenario_path));
    if (seed) {
        if (*seed < 0) throw UsageError("--seed must be non-negative");
        kv.set("seed", std::to_string(*seed));
    }
    const std::string canonical = kv.canonical();
    const synth::Scenario scenario = synth::parse_scenario(canonical);
    const fs::path dir = prepare_out_dir(out);
    const auto result = synth::generate_scenario(scenario);

    Manifest manifest("simulate", dir, canonical);
    if (binary) {
        manifest.write("events.bin", write_event_binary(result.events));
    } else {
        manifest.write("events.csv", write_event_csv(result.events));
    }
    manifest.write("annotations.csv", write_annotations(result.track.annotations));
    manifest.write("ground_truth.csv", write_trajectory_csv(result.track.ground_truth));
    return manifest.finish();
}

std::string cmd_estimate_rpm(const RunConfig& c) {
    const auto track = load_track(c);
    const EventStream events = load_events(require(c.events, "events"), c.sensor);
    const fs::path dir = prepare_out_dir(c.out);
    const auto series = rpm::estimate_rpm_stream(events, track, c.track, c.rpm);
    Manifest manifest("estimate-rpm", dir, c.canonical());
    manifest.write("rpm.csv", rpm::write_rpm_csv(series));
    return manifest.finish();
}

std::string cmd_forecast(const RunConfig& c) {
    const auto track = load_track(c);
    std::vector<rpm::RpmEstimate> series;
    if (c.method == Method::Proposed) series = rpm_series_for(c, track);
    const fs::path dir = prepare_out_dir(c.out);

    std::vector<Emission> emissions;
    switch (c.method) {
        case Method::Proposed: emissions = kalman::run_forecaster(track, series, c.forecaster); break;
        case Method::VanillaKf: emissions = baselines::vanilla_kalman(track, c.forecaster); break;
        case Method::Linear: emissions = baselines::run_linear(track, c.forecaster.forecast); break;
    }
    Manifest manifest("forecast", dir, c.canonical());
    if (c.method == Method::Proposed && !c.rpm_series) manifest.write("rpm.csv", rpm::write_rpm_csv(series));
    manifest.write("forecast_" + std::string(method_name(c.method)) + ".csv", write_forecast_csv(emissions));
    return manifest.finish();
}

struct ForecastInput {
    Method method;
    std::string sequence;
    fs::path path;
};

constexpr std::string_view kDefaultSequence = "seq";

ForecastInput parse_forecast_arg(const std::string& arg) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == arg.size()) {
        throw UsageError("--forecast expects method[:sequence]=path, got '" + arg + "'");
    }
    const std::string lhs = arg.substr(0, eq);
    const auto colon = lhs.find(':');
    ForecastInput in{parse_method(lhs.substr(0, colon)),
                     colon == std::string::npos ? std::string(kDefaultSequence) : lhs.substr(colon + 1),
                     arg.substr(eq + 1)};
    if (in.sequence.empty()) throw UsageError("empty sequence name in '" + arg + "'");
    return in;
}

Trajectory load_ground_truth(const fs::path& path, const RunConfig& c) {
    const std::string data = read_file(path);
    const std::string_view first = std::string_view(data).substr(0, data.find('\n'));
    if (text::trim(first) == kAnnotationCsvHeader) {
        const auto boxes = parse_annotations(data, c.sensor);
        const auto track = select_track(boxes, c.track);
        if (track.empty()) throw UnknownTrackError(c.track);
        return centers_of(track);
    }
    return parse_trajectory_csv(data);
}

std::string cmd_evaluate(const RunConfig& c, const std::vector<std::string>& forecast_args,
                         const std::vector<std::string>& gt_args, bool svg) {
    if (forecast_args.empty()) throw UsageError("at least one --forecast is required");
    if (gt_args.empty()) throw UsageError("--ground-truth is required");

    std::map<std::string, fs::path> gt_paths;
    for (const auto& arg : gt_args) {
        const auto eq = arg.find('=');
        const std::string seq = eq == std::string::npos ? std::string(kDefaultSequence) : arg.substr(0, eq);
        const fs::path path = eq == std::string::npos ? arg : arg.substr(eq + 1);
        if (!gt_paths.emplace(seq, path).second) throw UsageError("duplicate ground truth for '" + seq + "'");
    }
    std::map<std::string, Trajectory> gt;
    for (const auto& [seq, path] : gt_paths) gt.emplace(seq, load_ground_truth(path, c));

    // method -> sequence -> emissions; methods kept in comparison-table order.
    std::map<Method, std::map<std::string, std::vector<Emission>>> forecasts;
    for (const auto& arg : forecast_args) {
        const ForecastInput in = parse_forecast_arg(arg);
        if (!gt.count(in.sequence)) {
            throw UsageError("no --ground-truth for sequence '" + in.sequence + "'");
        }
        auto& slot = forecasts[in.method];
        if (slot.count(in.sequence)) {
            throw UsageError("duplicate forecast for " + std::string(method_name(in.method)) + ":" + in.sequence);
        }
        slot.emplace(in.sequence, parse_forecast_csv(read_file(in.path)));
    }

    const fs::path dir = prepare_out_dir(c.out);
    std::string config_text = c.canonical();
    for (const auto& [seq, path] : gt_paths) config_text += "ground_truth." + seq + "\n";

    Manifest manifest("evaluate", dir, config_text);
    std::vector<eval::MethodAggregate> comparison;
    for (const Method m : {Method::Linear, Method::VanillaKf, Method::Proposed}) {
        const auto it = forecasts.find(m);
        if (it == forecasts.end()) continue;
        const std::string name(method_name(m));
        std::vector<eval::SequenceResult> results;
        for (const auto& [seq, emissions] : it->second) {
            const auto& truth = gt.at(seq);
            results.push_back(eval::evaluate_sequence(seq, emissions, eval::nearest_sample(truth, c.eval_tolerance_us)));
            if (svg) manifest.write(name + "_" + seq + "_trajectory.svg", eval::trajectory_svg(truth, emissions, c.sensor.width, c.sensor.height));
        }
        const auto rows = eval::aggregate(results);
        manifest.write(name + "_results.csv", eval::write_results_csv(results));
        manifest.write(name + "_aggregate.csv", eval::write_aggregate_csv(rows));
        comparison.emplace_back(name, rows);
    }
    manifest.write("comparison.csv", eval::write_comparison_csv(comparison));
    if (svg) manifest.write("boxplot.svg", eval::boxplot_svg(comparison));
    return manifest.finish();
}

/// Config file first, then command-line overrides of the same key names.
RunConfig build_config(const std::optional<std::string>& config_path,
                       const std::map<std::string, CLI::Option*>& options,
                       const std::map<std::string, std::string>& values) {
    KeyValues kv = config_path ? KeyValues::parse(read_file(*config_path)) : KeyValues{};
    for (const auto& [key, opt] : options) {
        if (opt->count() > 0) kv.set(key, values.at(key));
    }
    return load_run_config(std::move(kv));
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App cli{"propcast: propeller RPM estimation and RPM-aware trajectory forecasting"};
    cli.require_subcommand(1);
    cli.set_help_all_flag("--help-all", "show help for every command");

    // simulate
    auto* sim = cli.add_subcommand("simulate", "generate a synthetic sequence from a scenario file");
    std::string scenario_path;
    std::optional<std::int64_t> sim_seed;
    std::optional<std::string> sim_out;
    bool sim_binary = false;
    sim->add_option("scenario,--config", scenario_path, "scenario file")->required();
    sim->add_option("--seed", sim_seed, "override the scenario seed");
    sim->add_option("--out", sim_out, "output directory")->required();
    sim->add_flag("--binary", sim_binary, "write events in the binary layout");

    // commands sharing RunConfig
    struct Shared {
        std::optional<std::string> config;
        std::map<std::string, std::string> values;
        std::map<std::string, CLI::Option*> options;
    };
    std::map<CLI::App*, Shared> shared;
    const auto add_run_command = [&](const std::string& name, const std::string& help) {
        auto* sub = cli.add_subcommand(name, help);
        Shared& s = shared[sub];
        sub->add_option("--config", s.config, "key=value config file");
        for (const auto& key : config_keys()) {
            const std::string k(key.name);
            s.values[k];
            s.options[k] = sub->add_option("--" + k, s.values[k], std::string(key.help));
        }
        return sub;
    };
    auto* est = add_run_command("estimate-rpm", "RPM series for one track");
    auto* fc = add_run_command("forecast", "trajectory forecasts for one track");
    auto* ev = add_run_command("evaluate", "ADE/FDE of forecast files against ground truth");
    std::vector<std::string> forecast_args;
    std::vector<std::string> gt_args;
    bool svg = false;
    ev->add_option("--forecast", forecast_args, "method[:sequence]=forecast.csv (repeatable)");
    ev->add_option("--ground-truth", gt_args, "[sequence=]path to trajectory or annotation CSV (repeatable)");
    ev->add_flag("--svg", svg, "also write SVG plots");

    std::vector<std::string> argv_storage{"propcast"};
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_storage) argv.push_back(a.c_str());

    try {
        try {
            cli.parse(static_cast<int>(argv.size()), argv.data());
        } catch (const CLI::CallForHelp& e) {
            out << cli.help();
            return 0;
        } catch (const CLI::CallForAllHelp& e) {
            out << cli.help("", CLI::AppFormatMode::All);
            return 0;
        } catch (const CLI::ParseError& e) {
            err << "error: " << e.what() << "\n";
            return 2;
        }

        std::string manifest;
        if (sim->parsed()) {
            manifest = cmd_simulate(scenario_path, sim_seed, sim_out ? std::optional<fs::path>(*sim_out) : std::nullopt, sim_binary);
        } else {
            CLI::App* sub = est->parsed() ? est : fc->parsed() ? fc : ev;
            const Shared& s = shared.at(sub);
            const RunConfig config = build_config(s.config, s.options, s.values);
            if (sub == est) {
                manifest = cmd_estimate_rpm(config);
            } else if (sub == fc) {
                manifest = cmd_forecast(config);
            } else {
                manifest = cmd_evaluate(config, forecast_args, gt_args, svg);
            }
        }
        out << manifest;
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return 1;
    }
}

int run_cli(int argc, const char* const* argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run_cli(args, std::cout, std::cerr);
}

}  // namespace propcast::app
