#pragma once

#include <cstdio>
#include <functional>
#include <stdexcept>
#include <string>

namespace multistate {

// Error categories map onto the CLI exit codes: ConfigError -> 1,
// DataError -> 2, NumericalError -> 3.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct DataError : Error {
    using Error::Error;
};

struct NumericalError : Error {
    using Error::Error;
};

// Data-layer failures.
struct MalformedRow : DataError {
    using DataError::DataError;
};
struct DuplicateKey : DataError {
    using DataError::DataError;
};
struct UnknownAgeBand : DataError {
    using DataError::DataError;
};
struct EmptyBand : DataError {
    using DataError::DataError;
};
struct MissingBand : DataError {
    using DataError::DataError;
};
struct MissingYear : DataError {
    using DataError::DataError;
};
struct InsufficientKnots : DataError {
    using DataError::DataError;
};
struct NonpositiveRate : DataError {
    using DataError::DataError;
};

// Argument / configuration failures.
struct InvalidParams : ConfigError {
    using ConfigError::ConfigError;
};
struct InvalidVariant : ConfigError {
    using ConfigError::ConfigError;
};
struct InvalidState : ConfigError {
    using ConfigError::ConfigError;
};
struct UnsupportedHealthState : ConfigError {
    using ConfigError::ConfigError;
};
struct TermExceedsMaxAge : ConfigError {
    using ConfigError::ConfigError;
};
struct OutOfRange : ConfigError {
    using ConfigError::ConfigError;
};
struct NegativeDuration : ConfigError {
    using ConfigError::ConfigError;
};
struct ZeroExposure : ConfigError {
    using ConfigError::ConfigError;
};

// Numerical failures.
struct StepTooLarge : NumericalError {
    using NumericalError::NumericalError;
};

// Non-fatal diagnostics (missing years inside an averaging range, floored
// zero rates). Tests may swap the sink to capture messages.
inline std::function<void(const std::string&)>& warning_sink() {
    static std::function<void(const std::string&)> sink = [](const std::string& msg) {
        std::fprintf(stderr, "warning: %s\n", msg.c_str());
    };
    return sink;
}

inline void warn(const std::string& msg) {
    if (warning_sink()) warning_sink()(msg);
}

} // namespace multistate
