#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace llctrack {

enum class ErrorCode {
    InvalidArgument,
    SingularSystem,
    OracleTooLarge,
    ZeroDiagonal,
    NotPositiveDefinite,
    KTooLarge,
    IndicatorOutOfRange,
    BoxOutOfFrame,
    DegenerateBox,
    DegenerateWarp,
    ZeroPatch,
    DecodeError,
    AllParticlesDegenerate,
    LengthMismatch,
    ParseError,
    Io,
};

inline std::string_view to_string(ErrorCode code)
{
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::SingularSystem: return "SingularSystem";
        case ErrorCode::OracleTooLarge: return "OracleTooLarge";
        case ErrorCode::ZeroDiagonal: return "ZeroDiagonal";
        case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
        case ErrorCode::KTooLarge: return "KTooLarge";
        case ErrorCode::IndicatorOutOfRange: return "IndicatorOutOfRange";
        case ErrorCode::BoxOutOfFrame: return "BoxOutOfFrame";
        case ErrorCode::DegenerateBox: return "DegenerateBox";
        case ErrorCode::DegenerateWarp: return "DegenerateWarp";
        case ErrorCode::ZeroPatch: return "ZeroPatch";
        case ErrorCode::DecodeError: return "DecodeError";
        case ErrorCode::AllParticlesDegenerate: return "AllParticlesDegenerate";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace llctrack
