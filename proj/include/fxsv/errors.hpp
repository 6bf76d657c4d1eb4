#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fxsv {

enum class ErrorCode {
    NonPositivePillarVol,
    InvalidForward,
    DeltaOutOfRange,
    ParseError,
    InvariantViolation,
    NumericOverflow,
    StepUnderflow,
    OutOfBounds,
    AlphaInvalid,
    InsufficientStrikes,
    NonPositiveVariance,
    NegativeAdjusted,
    DegenerateMoments,
    NegativeRadicand,
    SingularRegression,
    NoValidRoot,
    ShortSeries,
    ZeroTotalVariance,
    NonFiniteObjective,
    InvalidArgument,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Row and column are 1-based; column 0 means the whole row.
class ParseError : public Error {
public:
    ParseError(std::size_t row, std::size_t column, const std::string& message);

    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

[[noreturn]] void raise(ErrorCode code, const std::string& message);

}  // namespace fxsv
