#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace m3dram {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidConfig : public Error {
public:
    using Error::Error;
};

class NonConvergence : public Error {
public:
    using Error::Error;
};

class CalibrationFailure : public Error {
public:
    CalibrationFailure(const std::string& msg, std::string worst_row)
        : Error(msg), worst_row_(std::move(worst_row)) {}
    const std::string& worst_row() const noexcept { return worst_row_; }

private:
    std::string worst_row_;
};

class Underdetermined : public Error {
public:
    using Error::Error;
};

class InconsistentInputs : public Error {
public:
    using Error::Error;
};

class InvalidStats : public Error {
public:
    using Error::Error;
};

class TimingViolation : public Error {
public:
    using Error::Error;
};

/// Malformed input text. Carries the 1-based line number (0 when unknown).
class ParseError : public Error {
public:
    ParseError(std::string source, std::size_t line, const std::string& reason)
        : Error(source + ":" + std::to_string(line) + ": " + reason),
          source_(std::move(source)), line_(line), reason_(reason) {}

    const std::string& source() const noexcept { return source_; }
    std::size_t line() const noexcept { return line_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::string source_;
    std::size_t line_;
    std::string reason_;
};

class TraceParseError : public ParseError {
public:
    using ParseError::ParseError;
};

class OrderViolation : public TraceParseError {
public:
    using TraceParseError::TraceParseError;
};

}  // namespace m3dram
