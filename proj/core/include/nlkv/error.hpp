#pragma once

#include <stdexcept>
#include <string>

namespace nlkv {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration: unknown unit, bad grid parameters, unknown model name.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Input data that cannot be used: malformed rows, empty files, domains
/// smaller than a single subdomain.
class DataError : public Error {
public:
    using Error::Error;
};

/// A sample set on which the requested loss is meaningless (single-class
/// labels for the weighted cross entropy).
class DegenerateSampleError : public Error {
public:
    using Error::Error;
};

/// A model evaluated outside of its domain (non-positive density).
class DomainError : public Error {
public:
    using Error::Error;
};

}  // namespace nlkv
