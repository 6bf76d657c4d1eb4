#include "fxsv/errors.hpp"

namespace fxsv {

std::string_view error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::NonPositivePillarVol: return "NonPositivePillarVol";
        case ErrorCode::InvalidForward: return "InvalidForward";
        case ErrorCode::DeltaOutOfRange: return "DeltaOutOfRange";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::InvariantViolation: return "InvariantViolation";
        case ErrorCode::NumericOverflow: return "NumericOverflow";
        case ErrorCode::StepUnderflow: return "StepUnderflow";
        case ErrorCode::OutOfBounds: return "OutOfBounds";
        case ErrorCode::AlphaInvalid: return "AlphaInvalid";
        case ErrorCode::InsufficientStrikes: return "InsufficientStrikes";
        case ErrorCode::NonPositiveVariance: return "NonPositiveVariance";
        case ErrorCode::NegativeAdjusted: return "NegativeAdjusted";
        case ErrorCode::DegenerateMoments: return "DegenerateMoments";
        case ErrorCode::NegativeRadicand: return "NegativeRadicand";
        case ErrorCode::SingularRegression: return "SingularRegression";
        case ErrorCode::NoValidRoot: return "NoValidRoot";
        case ErrorCode::ShortSeries: return "ShortSeries";
        case ErrorCode::ZeroTotalVariance: return "ZeroTotalVariance";
        case ErrorCode::NonFiniteObjective: return "NonFiniteObjective";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

ParseError::ParseError(std::size_t row, std::size_t column, const std::string& message)
    : Error(ErrorCode::ParseError,
            "row " + std::to_string(row) +
                (column > 0 ? ", column " + std::to_string(column) : std::string()) + ": " +
                message),
      row_(row),
      column_(column) {}

void raise(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace fxsv
