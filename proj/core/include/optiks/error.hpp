#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace optiks {

enum class ErrorCode {
    InvalidParams,
    UnsupportedKind,
    DegenerateCurve,
    NonMonotonicParams,
    NonPositiveSpeed,
    QueryOutOfRange,
    NonMonotonicX,
    ShapeMismatch,
    RasterTooCoarse,
    StaleCache,
    EmptyBandSet,
    AxisCountMismatch,
    NoActiveTerms,
    InfeasibleGrid,
    NonFiniteGradient,
    TargetUnreachable,
    NonTwoDimensional,
    NyquistViolation,
    ParseError,
    IoError,
    MissingKey,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace optiks
