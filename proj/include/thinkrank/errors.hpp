#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace thinkrank {

// Base class for every error the library raises. The CLI maps concrete
// types onto distinct exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input data; carries a 1-based line number when known.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& msg) : Error(msg) {}
    ParseError(std::size_t line, const std::string& msg)
        : Error("line " + std::to_string(line) + ": " + msg), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_ = 0;
};

// Structurally valid input that violates a documented invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Bad or missing configuration (flags, config file, prompt map keys).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Transport or HTTP failure talking to a completion backend. Transient
// failures (connect errors, 429, 5xx) are eligible for retry.
class BackendError : public Error {
public:
    explicit BackendError(const std::string& msg, int status = 0, bool transient = true)
        : Error(msg), status_(status), transient_(transient) {}

    int status() const noexcept { return status_; }
    bool transient() const noexcept { return transient_; }

private:
    int status_ = 0;
    bool transient_ = true;
};

// The backend answered but lacks a required feature (e.g. no logprobs).
class CapabilityError : public Error {
public:
    using Error::Error;
};

// Neither answer token appeared among the returned logprob alternatives.
class UndecidableError : public Error {
public:
    using Error::Error;
};

} // namespace thinkrank
