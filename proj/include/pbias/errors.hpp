#pragma once

#include <stdexcept>
#include <string>

namespace pbias {

// Exit-code mapping lives in the CLI: config=2, backend=3, parse/validation=4.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BackendError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The backend exists but does not advertise the requested capability.
struct CapabilityError : BackendError {
    using BackendError::BackendError;
};

} // namespace pbias
