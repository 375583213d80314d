#include "propcast/kv.hpp"

#include "propcast/errors.hpp"
#include "propcast/text.hpp"

namespace propcast {

KeyValues KeyValues::parse(std::string_view input) {
    KeyValues kv;
    text::LineReader lines(input);
    while (auto raw = lines.next()) {
        const auto n = lines.line_number();
        auto line = *raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = text::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ParseError("expected key=value (line " + std::to_string(n) + ")", n);
        }
        const std::string key(text::trim(line.substr(0, eq)));
        const std::string value(text::trim(line.substr(eq + 1)));
        if (key.empty()) throw ParseError("empty key (line " + std::to_string(n) + ")", n);
        if (!kv.values_.emplace(key, value).second) {
            throw ParseError("duplicate key '" + key + "' (line " + std::to_string(n) + ")", n);
        }
    }
    return kv;
}

std::optional<std::string> KeyValues::take_string(const std::string& key) {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    consumed_.insert(key);
    return it->second;
}

std::optional<double> KeyValues::take_double(const std::string& key) {
    const auto s = take_string(key);
    if (!s) return std::nullopt;
    const auto v = text::parse_double(*s);
    if (!v) throw ValidationError("key '" + key + "' expects a number, got '" + *s + "'");
    return v;
}

std::optional<std::int64_t> KeyValues::take_int(const std::string& key) {
    const auto s = take_string(key);
    if (!s) return std::nullopt;
    const auto v = text::parse_int(*s);
    if (!v) throw ValidationError("key '" + key + "' expects an integer, got '" + *s + "'");
    return v;
}

std::string KeyValues::take_string(const std::string& key, std::string fallback) {
    return take_string(key).value_or(std::move(fallback));
}

double KeyValues::take_double(const std::string& key, double fallback) {
    return take_double(key).value_or(fallback);
}

std::int64_t KeyValues::take_int(const std::string& key, std::int64_t fallback) {
    return take_int(key).value_or(fallback);
}

void KeyValues::reject_unconsumed() const {
    for (const auto& [key, _] : values_) {
        if (!consumed_.count(key)) throw ValidationError("unknown key '" + key + "'");
    }
}

std::string KeyValues::canonical() const {
    std::string out;
    for (const auto& [k, v] : values_) {
        out += k;
        out.push_back('=');
        out += v;
        out.push_back('\n');
    }
    return out;
}

}  // namespace propcast
