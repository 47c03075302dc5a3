#pragma once
// Error types shared across the library. Everything derives from
// vreg::Error so callers can catch the whole family at once.

#include <stdexcept>
#include <string>

namespace vreg {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// geometry
struct GimbalLockError : Error {
    using Error::Error;
};
struct DegenerateError : Error {
    using Error::Error;
};

// volume
struct DimMismatchError : Error {
    using Error::Error;
};
struct UnknownSpecError : Error {
    using Error::Error;
};

// env
struct DepthExceededError : Error {
    using Error::Error;
};

// policy / net
struct ShapeMismatchError : Error {
    using Error::Error;
};
struct NonFiniteLossError : Error {
    NonFiniteLossError(const std::string& msg, long step)
        : Error(msg), step_index(step) {}
    long step_index = -1;
};

// baseline
struct EmptyOverlapError : Error {
    using Error::Error;
};

// cli / io
struct ConfigError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};

}  // namespace vreg
