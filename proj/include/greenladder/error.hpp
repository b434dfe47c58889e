#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace greenladder {

enum class ErrorCode {
    InvalidArgument,
    MalformedRow,
    DuplicateKey,
    MissingHeader,
    InvariantViolation,
    IoFailure,
    TooFewVideos,
    MissingAnchorRecord,
    CommandFailed,
    ParseFailure,
    Timeout,
    NegativeTime,
    DegenerateDesignMatrix,
    NonFiniteInput,
    EmptyGrid,
    TooFewSamples,
    ConstantTruth,
    EmptyInput,
    NonPositiveBaseline,
    MissingModel,
    MissingGroundTruth,
    MissingCell,
    ZeroVariance,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::DuplicateKey: return "DuplicateKey";
    case ErrorCode::MissingHeader: return "MissingHeader";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::TooFewVideos: return "TooFewVideos";
    case ErrorCode::MissingAnchorRecord: return "MissingAnchorRecord";
    case ErrorCode::CommandFailed: return "CommandFailed";
    case ErrorCode::ParseFailure: return "ParseFailure";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::NegativeTime: return "NegativeTime";
    case ErrorCode::DegenerateDesignMatrix: return "DegenerateDesignMatrix";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::EmptyGrid: return "EmptyGrid";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::ConstantTruth: return "ConstantTruth";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NonPositiveBaseline: return "NonPositiveBaseline";
    case ErrorCode::MissingModel: return "MissingModel";
    case ErrorCode::MissingGroundTruth: return "MissingGroundTruth";
    case ErrorCode::MissingCell: return "MissingCell";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    }
    return "Unknown";
}

/// Every failure raised by the library carries a machine-checkable code and,
/// where one exists, the offending item (field name, line number, file, ...).
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail),
          code_(code), detail_(std::move(detail)) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

} // namespace greenladder
