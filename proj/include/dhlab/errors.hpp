#pragma once

#include <stdexcept>
#include <string>

namespace dhlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Point outside the model's chart domain, or wrong dimension.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Symplectic form numerically degenerate (|Pfaffian| below threshold).
class DegeneracyError : public Error {
public:
    using Error::Error;
};

/// Sampling region has zero Liouville volume.
class EmptyRegionError : public Error {
public:
    using Error::Error;
};

class UnsupportedRankError : public Error {
public:
    using Error::Error;
};

/// Frame construction failed (the point is not a locally free point).
class FrameError : public Error {
public:
    using Error::Error;
};

class WallCrossingError : public Error {
public:
    using Error::Error;
};

/// Malformed model configuration or other bad input.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace dhlab
