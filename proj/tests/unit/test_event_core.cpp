#include <doctest.h>

#include <filesystem>

#include "oracles.hpp"
#include "propcast/errors.hpp"
#include "propcast/event_io.hpp"
#include "propcast/events.hpp"

using namespace propcast;

namespace {

std::string binary_header(std::uint16_t w, std::uint16_t h) {
    std::string s = "EVT0";
    s.push_back(static_cast<char>(w & 0xFF));
    s.push_back(static_cast<char>(w >> 8));
    s.push_back(static_cast<char>(h & 0xFF));
    s.push_back(static_cast<char>(h >> 8));
    s.append(8, '\0');
    return s;
}

std::string binary_record(std::uint64_t t, std::uint16_t x, std::uint16_t y, std::uint8_t p) {
    std::string s;
    for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>((t >> (8 * i)) & 0xFF));
    s.push_back(static_cast<char>(x & 0xFF));
    s.push_back(static_cast<char>(x >> 8));
    s.push_back(static_cast<char>(y & 0xFF));
    s.push_back(static_cast<char>(y >> 8));
    s.push_back(static_cast<char>(p));
    return s;
}

template <class E, class F>
E capture(F&& f) {
    try {
        f();
    } catch (const E& e) {
        return e;
    }
    FAIL("expected exception not thrown");
    throw;
}

}  // namespace

TEST_CASE("event csv: single row maps fields directly") {
    const auto s = parse_event_csv("t_us,x,y,p\n1000,5,7,1");
    REQUIRE(s.size() == 1);
    const Event e = s.events()[0];
    CHECK(e.t == 1000);
    CHECK(e.x == 5);
    CHECK(e.y == 7);
    CHECK(e.polarity == Polarity::On);
}

TEST_CASE("event csv: header only gives an empty stream") {
    CHECK(parse_event_csv("t_us,x,y,p\n").empty());
    CHECK(parse_event_csv("t_us,x,y,p").empty());
}

TEST_CASE("event csv: timestamp regression names line 3") {
    const auto e = capture<ParseError>([] { parse_event_csv("t_us,x,y,p\n50,1,1,0\n40,1,1,0\n"); });
    CHECK(e.location() == 3);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
}

TEST_CASE("event csv: malformed rows and geometry") {
    CHECK(capture<ParseError>([] { parse_event_csv("t_us,x,y,p\n1,2,3\n"); }).location() == 2);
    CHECK(capture<ParseError>([] { parse_event_csv("t_us,x,y,p\n1,2,3,2\n"); }).location() == 2);
    CHECK(capture<ParseError>([] { parse_event_csv("t_us,x,y,p\n1,1280,3,1\n"); }).location() == 2);
    CHECK(capture<ParseError>([] { parse_event_csv("t_us,x,y,p\n1,0,720,1\n"); }).location() == 2);
    CHECK(capture<ParseError>([] { parse_event_csv("t_us,x,y,p\n-1,0,0,1\n"); }).location() == 2);
    CHECK(capture<ParseError>([] { parse_event_csv("t,x,y,p\n"); }).location() == 1);
    CHECK_NOTHROW(parse_event_csv("t_us,x,y,p\n1,9,9,1\n", SensorGeometry{10, 10}));
    CHECK_THROWS_AS(parse_event_csv("t_us,x,y,p\n1,10,9,1\n", SensorGeometry{10, 10}), ParseError);
}

TEST_CASE("event csv: ties keep file order") {
    const auto s = parse_event_csv("t_us,x,y,p\n5,3,3,1\n5,1,1,0\n5,2,2,1\n");
    REQUIRE(s.size() == 3);
    CHECK(s.events()[0].x == 3);
    CHECK(s.events()[1].x == 1);
    CHECK(s.events()[2].x == 2);
}

TEST_CASE("event binary: matches the csv example") {
    const auto bin = parse_event_binary(binary_header(1280, 720) + binary_record(1000, 5, 7, 1));
    const auto csv = parse_event_csv("t_us,x,y,p\n1000,5,7,1");
    CHECK(bin == csv);
}

TEST_CASE("event binary: header only is empty; geometry comes from the header") {
    const auto s = parse_event_binary(binary_header(640, 480));
    CHECK(s.empty());
    CHECK(s.geometry().width == 640);
    CHECK(s.geometry().height == 480);
}

TEST_CASE("event binary: 12 trailing bytes report the record offset") {
    std::string data = binary_header(1280, 720) + binary_record(1, 1, 1, 1) + binary_record(2, 1, 1, 0);
    data.append(12, '\0');
    const auto e = capture<ParseError>([&] { parse_event_binary(data); });
    CHECK(e.location() == 16 + 2 * 13);
}

TEST_CASE("event binary: bad magic, polarity, reserved bytes, order") {
    std::string bad = binary_header(1280, 720);
    bad[3] = '1';
    CHECK(capture<ParseError>([&] { parse_event_binary(bad); }).location() == 0);
    CHECK(capture<ParseError>([&] {
              parse_event_binary(binary_header(1280, 720) + binary_record(1, 1, 1, 2));
          }).location() == 16);
    std::string reserved = binary_header(1280, 720);
    reserved[10] = 1;
    CHECK_THROWS_AS(parse_event_binary(reserved), ParseError);
    CHECK_THROWS_AS(parse_event_binary("EVT"), ParseError);
    CHECK_THROWS_AS(parse_event_binary(binary_header(0, 720)), ParseError);
    CHECK(capture<ParseError>([&] {
              parse_event_binary(binary_header(1280, 720) + binary_record(5, 1, 1, 1) + binary_record(4, 1, 1, 1));
          }).location() == 16 + 13);
    CHECK(capture<ParseError>([&] {
              parse_event_binary(binary_header(100, 100) + binary_record(5, 100, 1, 1));
          }).location() == 16);
}

TEST_CASE("round trips: csv text and byte-exact binary") {
    oracle::Gen g(11);
    for (int trial = 0; trial < 20; ++trial) {
        const auto n = static_cast<std::size_t>(g.integer(0, 300));
        const EventStream s({1280, 720}, g.events(n, 1280, 720, 1'000'000));
        const std::string csv = write_event_csv(s);
        CHECK(write_event_csv(parse_event_csv(csv)) == csv);
        CHECK(parse_event_csv(csv) == s);
        const std::string bin = write_event_binary(s);
        CHECK(bin.size() == kBinaryHeaderSize + n * kBinaryRecordSize);
        CHECK(write_event_binary(parse_event_binary(bin)) == bin);
        CHECK(parse_event_binary(bin) == s);
    }
}

TEST_CASE("event csv: CRLF input parses like LF") {
    CHECK(parse_event_csv("t_us,x,y,p\r\n1,2,3,0\r\n") == parse_event_csv("t_us,x,y,p\n1,2,3,0\n"));
}

TEST_CASE("annotations: center, interleaved tracks, validation") {
    const auto one = parse_annotations("t_us,track_id,x_min,y_min,w,h\n33000,0,600,300,80,60\n");
    REQUIRE(one.size() == 1);
    CHECK(one[0].center().x == 640.0);
    CHECK(one[0].center().y == 330.0);
    CHECK_FALSE(one[0].clamped);

    const auto two = parse_annotations(
        "t_us,track_id,x_min,y_min,w,h\n0,0,10,10,5,5\n0,1,50,50,5,5\n33333,1,51,50,5,5\n33333,0,11,10,5,5\n");
    CHECK(two.size() == 4);
    CHECK(select_track(two, 0).size() == 2);
    CHECK(select_track(two, 1).size() == 2);
    CHECK(select_track(two, 1)[1].x_min == 51.0);
    CHECK(select_track(two, 7).empty());

    const auto zero_w = capture<ParseError>([] {
        parse_annotations("t_us,track_id,x_min,y_min,w,h\n0,0,1,1,5,5\n1,0,1,1,0,5\n");
    });
    CHECK(zero_w.location() == 3);
    CHECK_THROWS_AS(parse_annotations("t_us,track_id,x_min,y_min,w,h\n0,0,1,1,5,-1\n"), ParseError);
    CHECK(capture<ParseError>([] {
              parse_annotations("t_us,track_id,x_min,y_min,w,h\n10,0,1,1,5,5\n20,1,1,1,5,5\n5,0,1,1,5,5\n");
          }).location() == 4);
}

TEST_CASE("annotations: boxes are clamped into the sensor and flagged") {
    const auto b = parse_annotations("t_us,track_id,x_min,y_min,w,h\n0,0,-10,700,40,40\n");
    REQUIRE(b.size() == 1);
    CHECK(b[0].clamped);
    CHECK(b[0].x_min == 0.0);
    CHECK(b[0].x_min + b[0].w <= 1279.0);
    CHECK(b[0].y_min + b[0].h <= 719.0);
    const auto text = write_annotations(b);
    const auto again = parse_annotations(text);
    REQUIRE(again.size() == 1);
    CHECK(again[0].x_min == b[0].x_min);
    CHECK(again[0].w == b[0].w);
    CHECK(again[0].h == b[0].h);
    CHECK_FALSE(again[0].clamped);
    CHECK_THROWS_AS(parse_annotations("t_us,track_id,x_min,y_min,w,h\n0,0,2000,10,40,40\n"), Error);
}

TEST_CASE("window_events: half-open interval and pixel-inclusive box") {
    const EventStream s({1280, 720}, {{10, 5, 5, Polarity::On}, {20, 5, 5, Polarity::Off}, {30, 5, 5, Polarity::On}});
    BoundingBoxObservation box{0, 0, 0.0, 0.0, 10.0, 10.0};
    const auto w = window_events(s, 10, 30, box);
    REQUIRE(w.size() == 2);
    CHECK(w[0].t == 10);
    CHECK(w[1].t == 20);

    const EventStream edge({1280, 720}, {{1, 10, 10, Polarity::On}, {1, 11, 10, Polarity::On}, {1, 10, 11, Polarity::On}});
    const auto inside = window_events(edge, 0, 2, box);
    REQUIRE(inside.size() == 1);
    CHECK(inside[0].x == 10);
    CHECK(window_events(s, 30, 30, box).empty());
}

TEST_CASE("window_events: property against a brute-force filter") {
    oracle::Gen g(2024);
    const EventStream s({320, 240}, g.events(10'000, 320, 240, 500'000));
    const std::vector<Event> all(s.events().begin(), s.events().end());
    for (int trial = 0; trial < 200; ++trial) {
        const auto box = g.box(320, 240);
        const Micros t0 = g.integer(-10, 500'010);
        const Micros t1 = t0 + g.integer(0, 200'000);
        const auto got = window_events(s, t0, t1, box);
        const auto want = oracle::brute_window(all, t0, t1, box);
        REQUIRE(got.size() == want.size());
        CHECK(std::equal(got.begin(), got.end(), want.begin()));
    }
}

TEST_CASE("slice is a view into the stream") {
    const EventStream s({1280, 720}, {{1, 0, 0, Polarity::On}, {2, 0, 0, Polarity::On}, {2, 1, 0, Polarity::On}, {3, 0, 0, Polarity::On}});
    const auto v = s.slice(2, 3);
    CHECK(v.size() == 2);
    CHECK(v.data() == s.events().data() + 1);
    const EventStream copy = s;
    CHECK(copy.events().data() == s.events().data());
}

TEST_CASE("stream construction validates") {
    CHECK_THROWS_AS(EventStream({10, 10}, {{2, 0, 0, Polarity::On}, {1, 0, 0, Polarity::On}}), ValidationError);
    CHECK_THROWS_AS(EventStream({10, 10}, {{2, 10, 0, Polarity::On}}), ValidationError);
    CHECK_THROWS_AS(SensorGeometry({0, 10}).validate(), ValidationError);
}

TEST_CASE("file helpers: atomic write and format sniffing") {
    const auto dir = std::filesystem::temp_directory_path() / "propcast_event_core_test";
    std::filesystem::create_directories(dir);
    const EventStream s({1280, 720}, {{1, 2, 3, Polarity::On}, {4, 5, 6, Polarity::Off}});
    write_file_atomic(dir / "e.bin", write_event_binary(s));
    write_file_atomic(dir / "e.csv", write_event_csv(s));
    CHECK_FALSE(std::filesystem::exists(dir / "e.bin.tmp"));
    CHECK(load_events(dir / "e.bin") == s);
    CHECK(load_events(dir / "e.csv") == s);
    CHECK_THROWS_AS(read_file(dir / "missing.csv"), Error);
    CHECK_THROWS_AS(convert_fred_events(dir), NotImplementedError);
    std::filesystem::remove_all(dir);
}
