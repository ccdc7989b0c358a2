#pragma once

#include <stdexcept>
#include <string>

namespace schoolrd {

// Error taxonomy mirrored by the CLI exit codes (see tools/).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed market/dgp/run configuration, missing files, bad indices.
struct ConfigError : Error {
    using Error::Error;
};

// Invalid input data (rosters, profiles) with a pointer to the offending row.
struct DataError : Error {
    using Error::Error;
};

// Estimation cannot proceed: empty band, rank deficiency, zero denominator.
struct DegenerateError : Error {
    using Error::Error;
};

}  // namespace schoolrd
