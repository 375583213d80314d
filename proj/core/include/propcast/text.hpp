#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Small text helpers shared by the CSV and key-value readers/writers.
namespace propcast::text {

/// Shortest representation that parses back to the same double.
std::string format_double(double value);
void append_double(std::string& out, double value);
void append_int(std::string& out, std::int64_t value);

std::optional<std::int64_t> parse_int(std::string_view s);
std::optional<double> parse_double(std::string_view s);

std::string_view trim(std::string_view s);

/// Splits on `sep` without any quoting support.
std::vector<std::string_view> split(std::string_view s, char sep);

/// Iterates LF-separated lines; a trailing CR is stripped.
class LineReader {
public:
    explicit LineReader(std::string_view text) : text_(text) {}

    /// Next line, or nullopt at end of input. line_number() is 1-based.
    std::optional<std::string_view> next();
    std::size_t line_number() const noexcept { return line_; }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t line_ = 0;
};

}  // namespace propcast::text
