#pragma once

#include <stdexcept>
#include <string>

namespace lwlab {

/// Base class for all errors thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A required input (config file, key, value) is missing or malformed.
/// `key` names the offending entry when known.
struct ConfigError : Error {
    std::string key;
    ConfigError(const std::string& key_, const std::string& what_)
        : Error("config error at '" + key_ + "': " + what_), key(key_) {}
};

/// A query landed outside the domain an object can answer for
/// (trajectory time without an extension, sphere leaving a tabulated box, ...).
struct RangeError : Error {
    using Error::Error;
};

/// Evaluation requested at a point where the quantity is genuinely singular,
/// e.g. a field at the charge position itself.
struct SingularityError : Error {
    using Error::Error;
};

/// A trajectory history is too coarse for the requested operation.
struct ResolutionError : Error {
    using Error::Error;
};

/// An iterative procedure failed to converge within its iteration cap.
struct IterationError : Error {
    int iterations = 0;
    double last_delta = 0.0;
    IterationError(const std::string& what_, int iterations_, double last_delta_)
        : Error(what_), iterations(iterations_), last_delta(last_delta_) {}
};

/// A numerical quadrature could not be completed (integrand threw, or a
/// precondition such as support separation was violated).
struct QuadratureError : Error {
    using Error::Error;
};

}  // namespace lwlab
