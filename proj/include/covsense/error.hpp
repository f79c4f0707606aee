#pragma once

#include <stdexcept>
#include <string>

namespace covsense {

enum class ErrorCode {
    MalformedBuffer,
    AllZeroInput,
    InvalidPsi,
    DomainError,
    InvalidDesign,
    DegenerateDesign,
    SingularFilter,
    DimensionMismatch,
    InvalidSpec,
    ZeroSignal,
    Io,
};

[[nodiscard]] inline const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::MalformedBuffer: return "MalformedBuffer";
        case ErrorCode::AllZeroInput: return "AllZeroInput";
        case ErrorCode::InvalidPsi: return "InvalidPsi";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::InvalidDesign: return "InvalidDesign";
        case ErrorCode::DegenerateDesign: return "DegenerateDesign";
        case ErrorCode::SingularFilter: return "SingularFilter";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::InvalidSpec: return "InvalidSpec";
        case ErrorCode::ZeroSignal: return "ZeroSignal";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace covsense
