#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace windrl {

// Numeric values are part of the C API (see windrl.h); do not renumber.
enum class ErrorCode : int {
    Ok = 0,
    InvalidArgument = 1,
    OutOfPolarRange = 2,
    DegenerateInflow = 3,
    NonConvergence = 4,
    ShapeMismatch = 5,
    ParseError = 6,
    EmptySeries = 7,
    BufferTooSmall = 8,
    IndexOutOfRange = 9,
    EmptyLog = 10,
    Io = 11,
    StaleCache = 12,
    Internal = 99,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

class ParseError : public Error {
public:
    ParseError(std::size_t row, const std::string& what)
        : Error(ErrorCode::ParseError, "row " + std::to_string(row) + ": " + what), row_(row) {}

    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const char* what) {
    if (!cond) throw Error(code, what);
}

}  // namespace windrl
