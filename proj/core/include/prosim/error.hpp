#pragma once

#include <stdexcept>
#include <string>

namespace prosim {

// Error taxonomy mirrors the CLI exit codes: validation failures exit 2,
// I/O failures exit 3.

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad inputs: malformed forms, invalid configs, inconsistent logs.
struct ValidationError : Error {
    using Error::Error;
};

// Form-spec / document parsing.
struct ParseError : ValidationError {
    using ValidationError::ValidationError;
};

// Internal bookkeeping violations (stale unseat records, failed audits).
struct ConsistencyError : Error {
    using Error::Error;
};

// Requests the implementation deliberately declines (instance too large,
// configuration contradictions).
struct RefusalError : ValidationError {
    using ValidationError::ValidationError;
};

struct IoError : Error {
    using Error::Error;
};

} // namespace prosim
