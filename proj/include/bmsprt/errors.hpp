#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bmsprt {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A block (or resample) on which the metric or its standard error is
/// undefined or identically zero.
class DegenerateBlock : public Error {
public:
    using Error::Error;
};

class ZeroSigma : public Error {
public:
    using Error::Error;
};

class AllSamplesEqual : public Error {
public:
    using Error::Error;
};

class CalibrationFailed : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Base for problems with input data (as opposed to configuration).
class DataError : public Error {
public:
    using Error::Error;
};

class MissingHeader : public DataError {
public:
    using DataError::DataError;
};

class MalformedRow : public DataError {
public:
    MalformedRow(std::size_t line, std::string reason)
        : DataError("line " + std::to_string(line) + ": " + reason),
          line_(line),
          reason_(std::move(reason)) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::size_t line_;
    std::string reason_;
};

}  // namespace bmsprt
