#pragma once

#include <stdexcept>
#include <string>

namespace spd {

// Bad user-supplied parameters (window sizes, thresholds, K > N, ...).
struct config_error : std::invalid_argument {
    explicit config_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// Malformed on-disk data (PGM headers, model files, ...).
struct parse_error : std::runtime_error {
    explicit parse_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct io_error : std::runtime_error {
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical breakdown (non-PD covariance, total density underflow).
struct numerical_error : std::runtime_error {
    explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Inconsistent intermediate state between pipeline stages.
struct pipeline_error : std::runtime_error {
    explicit pipeline_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace spd
