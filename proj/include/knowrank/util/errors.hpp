#pragma once

#include <stdexcept>
#include <string>

namespace knowrank {

enum class ErrorCode {
    UnknownFormat,
    MalformedInput,
    EmptyResult,
    InsufficientItems,
    UnknownItem,
    SelfPair,
    UnknownKey,
    DivergedTraining,
    NoPaths,
    NoPositivePairs,
    MissingPlaceholder,
    RateLimited,
    CacheMiss,
    Timeout,
    MissingIndex,
    StaleUpstream,
    ConfigError,
    IoError,
};

const char* error_code_name(ErrorCode code);

/// All pipeline failures are reported through this one exception type;
/// the code tells callers (and tests) which contract was violated.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

inline const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::UnknownFormat: return "UnknownFormat";
        case ErrorCode::MalformedInput: return "MalformedInput";
        case ErrorCode::EmptyResult: return "EmptyResult";
        case ErrorCode::InsufficientItems: return "InsufficientItems";
        case ErrorCode::UnknownItem: return "UnknownItem";
        case ErrorCode::SelfPair: return "SelfPair";
        case ErrorCode::UnknownKey: return "UnknownKey";
        case ErrorCode::DivergedTraining: return "DivergedTraining";
        case ErrorCode::NoPaths: return "NoPaths";
        case ErrorCode::NoPositivePairs: return "NoPositivePairs";
        case ErrorCode::MissingPlaceholder: return "MissingPlaceholder";
        case ErrorCode::RateLimited: return "RateLimited";
        case ErrorCode::CacheMiss: return "CacheMiss";
        case ErrorCode::Timeout: return "Timeout";
        case ErrorCode::MissingIndex: return "MissingIndex";
        case ErrorCode::StaleUpstream: return "StaleUpstream";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace knowrank
