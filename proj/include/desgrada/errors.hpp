#pragma once

#include <stdexcept>
#include <string>

namespace desgrada {

// Error hierarchy used across the library. Every category maps to a spec'd
// failure mode; the CLI translates them to exit codes.

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad argument values (k out of range, empty inputs, invalid labels, ...).
struct ArgumentError : Error {
    using Error::Error;
};

// Dataset files missing or unreadable.
struct LoadError : Error {
    using Error::Error;
};

// Structurally invalid dataset content (cross-graph edges, bad indices).
struct FormatError : Error {
    using Error::Error;
};

// Unparseable tokens in input files.
struct ParseError : Error {
    using Error::Error;
};

// Tensor shape mismatches.
struct ShapeError : Error {
    using Error::Error;
};

// Values outside a function's mathematical domain.
struct DomainError : Error {
    using Error::Error;
};

// Non-finite values where finite math is required.
struct NumericError : Error {
    using Error::Error;
};

// Inconsistent run configuration.
struct ConfigError : Error {
    using Error::Error;
};

} // namespace desgrada
