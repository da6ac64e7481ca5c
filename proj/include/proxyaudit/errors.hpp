#pragma once

#include <stdexcept>
#include <string>

namespace proxyaudit {

// Base of every error the toolkit raises on purpose. The CLI maps the three
// families below onto exit codes 1 (data), 2 (config), 3 (backend).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input data: malformed rows, schema violations, replay misses.
class DataError : public Error {
public:
    using Error::Error;
};

// Invalid configuration, unreadable/unwritable paths, infeasible parameters.
class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public ConfigError {
public:
    IoError(const std::string& path, const std::string& what)
        : ConfigError(path + ": " + what), path_(path) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

// Backend or transport failure. `retryable()` separates transient failures
// (timeouts, 429, 5xx) from ones that will not heal by waiting.
class BackendError : public Error {
public:
    BackendError(const std::string& what, bool retryable)
        : Error(what), retryable_(retryable) {}
    bool retryable() const noexcept { return retryable_; }

private:
    bool retryable_;
};

}  // namespace proxyaudit
