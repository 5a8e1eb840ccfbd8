#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gdm {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Boundary conditions violate an invariant or make the geodesic solve impossible.
class InvalidBoundary : public Error {
public:
    using Error::Error;
};

/// |alpha0 - alpha1| is below the degeneracy tolerance; use the exponential schedule.
class DegenerateAlpha : public Error {
public:
    using Error::Error;
};

/// Argument outside its documented domain (t outside [0,1], ratio outside span, ...).
class OutOfRange : public Error {
public:
    using Error::Error;
};

class InvalidSigma : public Error {
public:
    using Error::Error;
};

/// Vector lengths disagree (data vs noise vs condition, image shapes, ...).
class ShapeMismatch : public Error {
public:
    using Error::Error;
};

/// Truncated sampling requested without a condition vector.
class MissingCondition : public Error {
public:
    using Error::Error;
};

/// Training loss became non-finite; carries the offending iteration.
class NonFiniteLoss : public Error {
public:
    NonFiniteLoss(const std::string& what, long iteration)
        : Error(what), iteration_(iteration) {}
    long iteration() const { return iteration_; }

private:
    long iteration_;
};

/// Sampler state overflowed or produced NaN.
class NonFinite : public Error {
public:
    using Error::Error;
};

/// Path comparison requested across schedules whose endpoints differ.
class EndpointMismatch : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace gdm
