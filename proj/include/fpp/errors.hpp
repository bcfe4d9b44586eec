#pragma once
#include <stdexcept>
#include <string>

namespace fpp {

// common base so callers can catch everything from this library at once
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// bad user-supplied config (dimension, box, params, config file keys)
struct ConfigError : Error {
    using Error::Error;
};

// a vertex sequence that is not a lattice path (non-adjacent steps, leaves box)
struct MalformedPathError : Error {
    using Error::Error;
};

// query outside the configured bounding box / domain
struct OutOfDomainError : Error {
    using Error::Error;
};

// growth or distance computation hit the search box before it could certify
// the answer; caller should retry with a larger box
struct TruncationError : Error {
    using Error::Error;
};

// documented precondition of an operation violated (e.g. distribution not
// usable for a lemma that requires it)
struct PreconditionError : Error {
    using Error::Error;
};

// operation not available for this dimension / family
struct UnsupportedError : Error {
    using Error::Error;
};

// geometric operation produced or received an empty set where a nonempty one
// is required
struct EmptySetError : Error {
    using Error::Error;
};

// requested scale too coarse for the quantity being measured
struct ResolutionError : Error {
    using Error::Error;
};

// direction-family construction could not meet its own guarantees
struct InfeasibleFamilyError : Error {
    using Error::Error;
};

} // namespace fpp
