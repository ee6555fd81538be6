#pragma once

#include <stdexcept>
#include <string>

namespace zskg {

// Base type for everything thrown by this library.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Matrix / layer dimension mismatches.
struct shape_error : error {
    using error::error;
};

// Invalid parameter values (temperature <= 0, alpha outside [0,1], ...).
struct domain_error : error {
    using error::error;
};

// Out-of-range class or target indices.
struct index_error : error {
    using error::error;
};

// Operation called in the wrong order (backward before forward, untrained pipeline).
struct state_error : error {
    using error::error;
};

// Semantic validation failures in loaded or produced data.
struct data_error : error {
    using error::error;
};

// Malformed files; message names the file and field.
struct parse_error : data_error {
    using data_error::data_error;
};

// Filesystem failures; message carries the path.
struct io_error : error {
    using error::error;
};

// Remote provider failures; status is the HTTP status, 0 for transport errors.
struct provider_error : error {
    int status;
    explicit provider_error(const std::string& msg, int http_status = 0)
        : error(msg), status(http_status) {}
};

// A provider was asked for a capability it does not implement.
struct unsupported_error : provider_error {
    explicit unsupported_error(const std::string& msg) : provider_error(msg, 0) {}
};

// CLI misuse.
struct usage_error : error {
    using error::error;
};

} // namespace zskg
