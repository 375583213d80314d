#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace propcast {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input. `location()` is a 1-based line number for text formats
/// and a byte offset for binary formats; the message says which.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t location)
        : Error(message), location_(location) {}

    std::size_t location() const noexcept { return location_; }

private:
    std::size_t location_;
};

/// A value violates a documented invariant (ordering, ranges, geometry).
class ValidationError : public Error {
public:
    using Error::Error;
};

class UnknownTrackError : public Error {
public:
    explicit UnknownTrackError(int track_id)
        : Error("track id " + std::to_string(track_id) + " not present in annotations"),
          track_id_(track_id) {}

    int track_id() const noexcept { return track_id_; }

private:
    int track_id_;
};

class NotImplementedError : public Error {
public:
    using Error::Error;
};

}  // namespace propcast
