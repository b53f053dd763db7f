#pragma once

#include <stdexcept>
#include <string>

namespace grpolab {

/// Base for all errors raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad configuration: invalid values, mismatched dimensions between
/// configured components, schema violations in config files.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Filesystem / serialization failures.
class IoError : public Error {
public:
    using Error::Error;
};

/// Transient remote failure (network error after exhausting retries).
/// Callers may retry the whole operation.
class RemoteError : public Error {
public:
    using Error::Error;
};

}  // namespace grpolab
