#pragma once

#include <stdexcept>
#include <string>

namespace igshm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor shapes or dimensions that do not fit together.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// NaN/Inf in activations, gradients or losses, or an unstable integration.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Malformed, missing or inconsistent input data.
class DataError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration values or argument combinations.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace igshm
