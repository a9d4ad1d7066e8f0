#include "windrl/error.hpp"

namespace windrl {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::Ok: return "ok";
        case ErrorCode::InvalidArgument: return "invalid argument";
        case ErrorCode::OutOfPolarRange: return "angle of attack outside polar";
        case ErrorCode::DegenerateInflow: return "degenerate inflow";
        case ErrorCode::NonConvergence: return "solver did not converge";
        case ErrorCode::ShapeMismatch: return "shape mismatch";
        case ErrorCode::ParseError: return "parse error";
        case ErrorCode::EmptySeries: return "empty series";
        case ErrorCode::BufferTooSmall: return "buffer too small";
        case ErrorCode::IndexOutOfRange: return "index out of range";
        case ErrorCode::EmptyLog: return "empty log";
        case ErrorCode::Io: return "i/o error";
        case ErrorCode::StaleCache: return "stale cache";
        case ErrorCode::Internal: return "internal error";
    }
    return "unknown error";
}

}  // namespace windrl
