#include "propcast/event_io.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "propcast/text.hpp"

namespace propcast {
namespace {

std::string at_line(std::size_t line) { return " (line " + std::to_string(line) + ")"; }

std::uint64_t load_le(const char* p, std::size_t n) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i) {
        v |= std::uint64_t{static_cast<unsigned char>(p[i])} << (8 * i);
    }
    return v;
}

void store_le(std::string& out, std::uint64_t v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void expect_header(text::LineReader& lines, std::string_view header, std::string_view what) {
    const auto first = lines.next();
    if (!first || text::trim(*first) != header) {
        throw ParseError(std::string(what) + ": expected header '" + std::string(header) + "'" +
                             at_line(1),
                         1);
    }
}

}  // namespace

EventStream parse_event_csv(std::string_view text, SensorGeometry geometry) {
    geometry.validate();
    text::LineReader lines(text);
    expect_header(lines, kEventCsvHeader, "event csv");

    std::vector<Event> events;
    // Rough pre-size: rows are rarely shorter than ~12 bytes.
    events.reserve(text.size() / 12);
    Micros last_t = 0;
    while (auto line = lines.next()) {
        const std::size_t n = lines.line_number();
        if (text::trim(*line).empty()) continue;
        const auto fields = text::split(*line, ',');
        if (fields.size() != 4) {
            throw ParseError("event csv: expected 4 fields, got " + std::to_string(fields.size()) +
                                 at_line(n),
                             n);
        }
        const auto t = text::parse_int(fields[0]);
        const auto x = text::parse_int(fields[1]);
        const auto y = text::parse_int(fields[2]);
        const auto p = text::parse_int(fields[3]);
        if (!t || !x || !y || !p) throw ParseError("event csv: malformed row" + at_line(n), n);
        if (*t < 0) throw ParseError("event csv: negative timestamp" + at_line(n), n);
        if (*p != 0 && *p != 1) {
            throw ParseError("event csv: polarity must be 0 or 1" + at_line(n), n);
        }
        if (!geometry.contains(*x, *y)) {
            throw ParseError("event csv: pixel (" + std::to_string(*x) + "," + std::to_string(*y) +
                                 ") outside " + std::to_string(geometry.width) + "x" +
                                 std::to_string(geometry.height) + at_line(n),
                             n);
        }
        if (!events.empty() && *t < last_t) {
            throw ParseError("event csv: timestamp regression " + std::to_string(*t) + " < " +
                                 std::to_string(last_t) + at_line(n),
                             n);
        }
        last_t = *t;
        events.push_back({*t, static_cast<std::uint16_t>(*x), static_cast<std::uint16_t>(*y),
                          static_cast<Polarity>(*p)});
    }
    events.shrink_to_fit();
    return EventStream(geometry, std::move(events));
}

EventStream parse_event_binary(std::string_view bytes) {
    if (bytes.size() < kBinaryHeaderSize) {
        throw ParseError("event binary: truncated header at byte offset 0", 0);
    }
    if (bytes.substr(0, 4) != kBinaryMagic) {
        throw ParseError("event binary: bad magic at byte offset 0", 0);
    }
    SensorGeometry geometry;
    geometry.width = static_cast<std::uint32_t>(load_le(bytes.data() + 4, 2));
    geometry.height = static_cast<std::uint32_t>(load_le(bytes.data() + 6, 2));
    if (geometry.width == 0 || geometry.height == 0) {
        throw ParseError("event binary: zero sensor dimension at byte offset 4", 4);
    }
    for (std::size_t i = 8; i < kBinaryHeaderSize; ++i) {
        if (bytes[i] != 0) {
            throw ParseError("event binary: reserved header byte not zero at byte offset " +
                                 std::to_string(i),
                             i);
        }
    }

    const std::size_t body = bytes.size() - kBinaryHeaderSize;
    const std::size_t count = body / kBinaryRecordSize;
    if (body % kBinaryRecordSize != 0) {
        const std::size_t offset = kBinaryHeaderSize + count * kBinaryRecordSize;
        throw ParseError("event binary: truncated record at byte offset " + std::to_string(offset) +
                             " (" + std::to_string(body % kBinaryRecordSize) + " trailing bytes)",
                         offset);
    }

    std::vector<Event> events(count);
    Micros last_t = 0;
    const char* p = bytes.data() + kBinaryHeaderSize;
    for (std::size_t i = 0; i < count; ++i, p += kBinaryRecordSize) {
        const std::size_t offset = kBinaryHeaderSize + i * kBinaryRecordSize;
        const std::uint64_t t = load_le(p, 8);
        const auto x = static_cast<std::uint16_t>(load_le(p + 8, 2));
        const auto y = static_cast<std::uint16_t>(load_le(p + 10, 2));
        const auto pol = static_cast<unsigned char>(p[12]);
        if (t > static_cast<std::uint64_t>(INT64_MAX)) {
            throw ParseError("event binary: timestamp overflow at byte offset " +
                                 std::to_string(offset),
                             offset);
        }
        if (pol > 1) {
            throw ParseError("event binary: polarity " + std::to_string(pol) +
                                 " not in {0,1} at byte offset " + std::to_string(offset),
                             offset);
        }
        if (!geometry.contains(x, y)) {
            throw ParseError("event binary: pixel outside sensor at byte offset " +
                                 std::to_string(offset),
                             offset);
        }
        const auto ts = static_cast<Micros>(t);
        if (i > 0 && ts < last_t) {
            throw ParseError("event binary: timestamp regression at byte offset " +
                                 std::to_string(offset),
                             offset);
        }
        last_t = ts;
        events[i] = Event{ts, x, y, static_cast<Polarity>(pol)};
    }
    return EventStream(geometry, std::move(events));
}

std::string write_event_csv(const EventStream& stream) {
    std::string out;
    out.reserve(16 + stream.size() * 20);
    out.append(kEventCsvHeader);
    out.push_back('\n');
    for (const Event& e : stream.events()) {
        text::append_int(out, e.t);
        out.push_back(',');
        text::append_int(out, e.x);
        out.push_back(',');
        text::append_int(out, e.y);
        out.push_back(',');
        out.push_back(e.polarity == Polarity::On ? '1' : '0');
        out.push_back('\n');
    }
    return out;
}

std::string write_event_binary(const EventStream& stream) {
    std::string out;
    out.reserve(kBinaryHeaderSize + stream.size() * kBinaryRecordSize);
    out.append(kBinaryMagic);
    store_le(out, stream.geometry().width, 2);
    store_le(out, stream.geometry().height, 2);
    out.append(8, '\0');
    for (const Event& e : stream.events()) {
        store_le(out, static_cast<std::uint64_t>(e.t), 8);
        store_le(out, e.x, 2);
        store_le(out, e.y, 2);
        out.push_back(static_cast<char>(e.polarity));
    }
    return out;
}

std::vector<BoundingBoxObservation> parse_annotations(std::string_view text,
                                                      SensorGeometry geometry) {
    geometry.validate();
    text::LineReader lines(text);
    expect_header(lines, kAnnotationCsvHeader, "annotation csv");

    std::vector<BoundingBoxObservation> boxes;
    std::map<int, Micros> last_t_per_track;
    while (auto line = lines.next()) {
        const std::size_t n = lines.line_number();
        if (text::trim(*line).empty()) continue;
        const auto f = text::split(*line, ',');
        if (f.size() != 6) {
            throw ParseError("annotation csv: expected 6 fields, got " + std::to_string(f.size()) +
                                 at_line(n),
                             n);
        }
        const auto t = text::parse_int(f[0]);
        const auto id = text::parse_int(f[1]);
        const auto x = text::parse_double(f[2]);
        const auto y = text::parse_double(f[3]);
        const auto w = text::parse_double(f[4]);
        const auto h = text::parse_double(f[5]);
        if (!t || !id || !x || !y || !w || !h) {
            throw ParseError("annotation csv: malformed row" + at_line(n), n);
        }
        if (*t < 0) throw ParseError("annotation csv: negative timestamp" + at_line(n), n);
        if (*w <= 0.0 || *h <= 0.0) {
            throw ParseError("annotation csv: box width and height must be positive" + at_line(n),
                             n);
        }
        const int track = static_cast<int>(*id);
        if (const auto it = last_t_per_track.find(track);
            it != last_t_per_track.end() && *t < it->second) {
            throw ParseError("annotation csv: timestamps of track " + std::to_string(track) +
                                 " go backwards" + at_line(n),
                             n);
        }
        last_t_per_track[track] = *t;
        BoundingBoxObservation box{*t, track, *x, *y, *w, *h, false};
        try {
            boxes.push_back(clamp_to(box, geometry));
        } catch (const ValidationError& err) {
            throw ParseError(std::string("annotation csv: ") + err.what() + at_line(n), n);
        }
    }
    return boxes;
}

std::string write_annotations(std::span<const BoundingBoxObservation> boxes) {
    std::string out(kAnnotationCsvHeader);
    out.push_back('\n');
    for (const auto& b : boxes) {
        text::append_int(out, b.t);
        out.push_back(',');
        text::append_int(out, b.track_id);
        for (double v : {b.x_min, b.y_min, b.w, b.h}) {
            out.push_back(',');
            text::append_double(out, v);
        }
        out.push_back('\n');
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + path.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw Error("short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error("cannot rename into " + path.string());
    }
}

EventStream load_events(const std::filesystem::path& path, SensorGeometry csv_geometry) {
    const std::string data = read_file(path);
    if (std::string_view(data).substr(0, kBinaryMagic.size()) == kBinaryMagic) {
        return parse_event_binary(data);
    }
    return parse_event_csv(data, csv_geometry);
}

EventStream convert_fred_events(const std::filesystem::path& recording) {
    throw NotImplementedError("FRED event conversion is not available yet (input: " +
                              recording.string() + ")");
}

}  // namespace propcast
