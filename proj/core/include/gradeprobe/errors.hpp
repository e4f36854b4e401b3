#pragma once

#include <stdexcept>
#include <string>

namespace gradeprobe {

// Base for every error the library raises on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed configuration, preset lookup failures, dimension mismatches.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Input rejected by a contract check (oversize text, empty batch, bad distribution).
class InputError : public Error {
public:
    using Error::Error;
};

// Action index or fields outside the experiment's action space.
class InvalidActionError : public Error {
public:
    using Error::Error;
};

// Remote grader unreachable or returned something we cannot use.
class TransportError : public Error {
public:
    TransportError(std::string endpoint, const std::string& cause)
        : Error("grader transport error [" + endpoint + "]: " + cause),
          endpoint_(std::move(endpoint)) {}

    [[nodiscard]] const std::string& endpoint() const noexcept { return endpoint_; }

private:
    std::string endpoint_;
};

// Non-finite objective or gradient during an update.
class TrainingError : public Error {
public:
    using Error::Error;
};

// Episode log that does not parse or violates ordering.
class LogFormatError : public Error {
public:
    using Error::Error;
};

} // namespace gradeprobe
