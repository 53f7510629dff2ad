#pragma once

#include <stdexcept>
#include <string>

namespace avb {

enum class ErrorCode {
    InvalidGeometry,
    OutOfRange,
    BadLength,
    Unauthorized,
    DiskFull,
    DuplicateName,
    UnknownFile,
    InvalidK,
    TamperDetected,
    FormatError,
    SelfCheckFailed,
    Internal,
};

const char* error_code_name(ErrorCode code);

/// Exception carrying a stable error code; messages are for humans only.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

inline const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidGeometry: return "InvalidGeometry";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::BadLength: return "BadLength";
        case ErrorCode::Unauthorized: return "Unauthorized";
        case ErrorCode::DiskFull: return "DiskFull";
        case ErrorCode::DuplicateName: return "DuplicateName";
        case ErrorCode::UnknownFile: return "UnknownFile";
        case ErrorCode::InvalidK: return "InvalidK";
        case ErrorCode::TamperDetected: return "TamperDetected";
        case ErrorCode::FormatError: return "FormatError";
        case ErrorCode::SelfCheckFailed: return "SelfCheckFailed";
        case ErrorCode::Internal: return "Internal";
    }
    return "Unknown";
}

}  // namespace avb
