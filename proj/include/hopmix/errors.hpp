#pragma once

#include <stdexcept>
#include <string>

namespace hopmix {

// Error taxonomy shared by the library and the CLI.
// CLI exit codes: 0 ok, 1 usage, 2 data error, 3 numeric error.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input record (missing/ill-typed field). Message names the field.
struct SchemaError : Error {
    using Error::Error;
};

// A domain invariant does not hold (empty paragraph, dim mismatch, ...).
struct ValidationError : Error {
    using Error::Error;
};

// An embedding key is absent from a FromFile table. Message names the key.
struct LookupError : Error {
    using Error::Error;
};

// Bad magic, version, or geometry in a binary file.
struct FormatError : Error {
    using Error::Error;
};

// Unreadable/unwritable path, truncated file.
struct IoError : Error {
    using Error::Error;
};

// Operation invoked in the wrong state (update past the last hop, missing tape).
struct StateError : Error {
    using Error::Error;
};

// Distant-supervision example unusable (e.g. no sentence contains the answer).
struct LabelError : Error {
    using Error::Error;
};

// Training diverged (NaN/inf loss).
struct TrainingError : Error {
    using Error::Error;
};

}  // namespace hopmix
