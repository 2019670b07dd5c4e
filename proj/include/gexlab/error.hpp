#pragma once

#include <stdexcept>
#include <string>

namespace gexlab {

/// Failure categories shared by every module; the C API maps them 1:1 onto
/// status codes.
enum class ErrorCode {
    InvalidArgument,   // malformed input: sizes, ranges, parameters
    Domain,            // admissibility bound or driver validity radius breached
    NotRepresentable,  // object depends on the path on a recombining lattice
    NotConverged,      // iterative routine missed its tolerance
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

inline void require(bool condition, const std::string& what) {
    if (!condition) fail(ErrorCode::InvalidArgument, what);
}

}  // namespace gexlab
