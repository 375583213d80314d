#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "propcast/events.hpp"

namespace propcast {

/// Header line of the canonical event CSV.
inline constexpr std::string_view kEventCsvHeader = "t_us,x,y,p";
/// Header line of the canonical annotation CSV.
inline constexpr std::string_view kAnnotationCsvHeader = "t_us,track_id,x_min,y_min,w,h";

// Binary event layout, little-endian:
//   header  : "EVT0" | u16 width | u16 height | 8 reserved zero bytes
//   records : u64 t_us | u16 x | u16 y | u8 polarity   (13 bytes each)
inline constexpr std::size_t kBinaryHeaderSize = 16;
inline constexpr std::size_t kBinaryRecordSize = 13;
inline constexpr std::string_view kBinaryMagic = "EVT0";

/// Parses event CSV text. Errors carry the 1-based line number (the header
/// is line 1). Coordinates outside `geometry` are rejected, not clamped.
EventStream parse_event_csv(std::string_view text, SensorGeometry geometry = {});

/// Parses the binary layout above. Errors carry the byte offset of the
/// offending header field or record.
EventStream parse_event_binary(std::string_view bytes);

std::string write_event_csv(const EventStream& stream);
std::string write_event_binary(const EventStream& stream);

/// Annotation CSV. Boxes are clamped into `geometry` (recorded on the box);
/// timestamps must be non-decreasing per track id.
std::vector<BoundingBoxObservation> parse_annotations(std::string_view text,
                                                      SensorGeometry geometry = {});
std::string write_annotations(std::span<const BoundingBoxObservation> boxes);

std::string read_file(const std::filesystem::path& path);

/// Writes via a sibling temp file and rename, so readers never observe a
/// partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Loads an event file, picking the binary parser when the file starts with
/// the binary magic and the CSV parser otherwise.
EventStream load_events(const std::filesystem::path& path, SensorGeometry csv_geometry = {});

/// Entry point for converting recordings in the FRED dataset layout into the
/// canonical formats.
///
/// The FRED on-disk event encoding has not been verified against the dataset
/// yet, so this always throws NotImplementedError. A conversion is expected to
/// produce one canonical event file per sequence plus the annotation CSV with
/// the dataset's per-frame boxes and track identities.
EventStream convert_fred_events(const std::filesystem::path& recording);

}  // namespace propcast
