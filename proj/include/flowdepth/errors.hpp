#pragma once

#include <stdexcept>
#include <string>

namespace flowdepth {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raster dimensions do not agree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Value outside its mathematical domain (non-positive depth, bad region id, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration value.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Problem instance is degenerate (no parallax, zero median, ...).
class DegenerateError : public Error {
public:
    using Error::Error;
};

/// An operation that averages over valid pixels found none.
class EmptyDomainError : public Error {
public:
    using Error::Error;
};

/// Inputs contradict each other (overlapping region claims, ...).
class ConsistencyError : public Error {
public:
    using Error::Error;
};

/// Binary file does not match the expected layout.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Text input could not be parsed.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Filesystem failure.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace flowdepth
