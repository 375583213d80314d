#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "propcast/events.hpp"
#include "propcast/kalman.hpp"
#include "propcast/kv.hpp"
#include "propcast/rpm.hpp"

namespace propcast::app {

enum class Method { Proposed, VanillaKf, Linear };

std::string_view method_name(Method m);
/// Throws ValidationError for anything but proposed, vanilla_kf, linear.
Method parse_method(std::string_view name);

/// Every tunable of a run. Keys use the dotted names listed by config_keys().
struct RunConfig {
    rpm::RpmConfig rpm;
    kalman::ForecasterConfig forecaster;
    Method method = Method::Proposed;
    SensorGeometry sensor;
    int track = 0;
    std::uint64_t seed = 0;
    Micros eval_tolerance_us = 16'667;

    std::optional<std::filesystem::path> events;
    std::optional<std::filesystem::path> annotations;
    std::optional<std::filesystem::path> rpm_series;
    std::optional<std::filesystem::path> out;

    void validate() const;
    /// Sorted `key=value` lines of every effective setting except paths.
    std::string canonical() const;
};

struct ConfigKey {
    std::string_view name;
    std::string_view help;
};
const std::vector<ConfigKey>& config_keys();

/// Consumes the known keys, rejects the rest and validates.
RunConfig load_run_config(KeyValues kv);

std::string sha256_hex(std::string_view data);

/// Runs the command line. Exit codes: 0 success, 1 internal error,
/// 2 user or input error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv);

}  // namespace propcast::app
