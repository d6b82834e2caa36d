#pragma once

#include <stdexcept>
#include <string>

namespace drnet {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid numeric parameter (negative scale, p outside the supported set, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Dimension or length mismatch.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Problem size beyond a hard cap (support size, binomial overflow, width).
class CapacityError : public Error {
public:
    using Error::Error;
};

/// Randomly drawn ridge directions failed the span check too often.
class DegenerateError : public Error {
public:
    using Error::Error;
};

/// Caller violated a documented precondition (e.g. initial net outside the hypothesis space).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Malformed experiment configuration or input file.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace drnet
