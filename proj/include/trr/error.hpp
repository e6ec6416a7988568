#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace trr {

enum class ErrorCode {
    // ec_crypto
    EmbeddingFailure,
    MalformedCipher,
    LengthMismatch,
    InvalidKey,
    // wire codecs
    DelayOutOfRange,
    SizeMismatch,
    Truncated,
    PayloadTooLarge,
    TxTooLarge,
    MessageTooLong,
    BadMagic,
    BadChecksum,
    UnknownCommand,
    // routing / runtime
    InsufficientNodes,
    MalformedRouting,
    NotTrr,
    InvalidArgument,
    // simulation / tooling
    InvalidConfig,
    NotObserved,
    IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// The single exception type thrown by this library. Every failure path
/// carries a typed code so callers can branch without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::EmbeddingFailure: return "EmbeddingFailure";
    case ErrorCode::MalformedCipher: return "MalformedCipher";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InvalidKey: return "InvalidKey";
    case ErrorCode::DelayOutOfRange: return "DelayOutOfRange";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::Truncated: return "Truncated";
    case ErrorCode::PayloadTooLarge: return "PayloadTooLarge";
    case ErrorCode::TxTooLarge: return "TxTooLarge";
    case ErrorCode::MessageTooLong: return "MessageTooLong";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::BadChecksum: return "BadChecksum";
    case ErrorCode::UnknownCommand: return "UnknownCommand";
    case ErrorCode::InsufficientNodes: return "InsufficientNodes";
    case ErrorCode::MalformedRouting: return "MalformedRouting";
    case ErrorCode::NotTrr: return "NotTrr";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::NotObserved: return "NotObserved";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

} // namespace trr
