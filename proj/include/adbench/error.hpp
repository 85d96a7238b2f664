#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace adbench {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text. Carries the file and 1-based line number.
class ParseError : public Error {
public:
    ParseError(std::string file, std::size_t line, const std::string& what)
        : Error(file + ":" + std::to_string(line) + ": " + what), file_(std::move(file)), line_(line) {}

    const std::string& file() const noexcept { return file_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string file_;
    std::size_t line_;
};

/// Well-formed input that violates a domain invariant (dangling key,
/// duplicate row, overlapping intervals, contradictory configuration).
/// `line` is 0 when the violation is not tied to a single row.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(what) {}
    ValidationError(std::string file, std::size_t line, const std::string& what)
        : Error(file + ":" + std::to_string(line) + ": " + what), file_(std::move(file)), line_(line) {}

    const std::string& file() const noexcept { return file_; }
    std::size_t line() const noexcept { return line_; }

private:
    std::string file_;
    std::size_t line_ = 0;
};

/// Synthetic-panel marginals that cannot be reached.
class CalibrationError : public Error {
public:
    using Error::Error;
};

/// Failure while executing or persisting experiments.
class ExecutionError : public Error {
public:
    using Error::Error;
};

}  // namespace adbench
