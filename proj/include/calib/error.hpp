#pragma once

#include <stdexcept>
#include <string>

namespace calib {

/// Base class for all errors thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid configuration (bad flags, scenario/classifier mismatch, ...).
/// The CLI maps this to exit code 1, everything else to 2.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// Problems with input data (missing files, malformed CSV cells, ...).
class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(msg) {}
};

/// An iterative fit failed to converge. Carries the last iterate so the
/// caller can inspect how far the optimizer got.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& msg, double a, double b)
        : Error(msg), last_a(a), last_b(b) {}
    double last_a;
    double last_b;
};

}  // namespace calib
