#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace propcast {

/// Flat `key=value` text with dotted keys, `#` comments and blank lines.
/// Typed getters mark keys as consumed; reject_unconsumed() then turns any
/// key nobody asked for into an error.
class KeyValues {
public:
    /// Throws ParseError (with line number) on malformed lines or duplicate keys.
    static KeyValues parse(std::string_view text);

    void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
    bool contains(const std::string& key) const { return values_.count(key) != 0; }
    const std::map<std::string, std::string>& entries() const noexcept { return values_; }

    std::optional<std::string> take_string(const std::string& key);
    std::optional<double> take_double(const std::string& key);
    std::optional<std::int64_t> take_int(const std::string& key);

    std::string take_string(const std::string& key, std::string fallback);
    double take_double(const std::string& key, double fallback);
    std::int64_t take_int(const std::string& key, std::int64_t fallback);

    /// Throws ValidationError naming the first key that was never taken.
    void reject_unconsumed() const;

    /// `key=value` lines sorted by key; stable input for hashing.
    std::string canonical() const;

private:
    std::map<std::string, std::string> values_;
    std::set<std::string> consumed_;
};

}  // namespace propcast
