#include "optiks/error.hpp"

namespace optiks {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidParams: return "invalid-params";
        case ErrorCode::UnsupportedKind: return "unsupported-kind";
        case ErrorCode::DegenerateCurve: return "degenerate-curve";
        case ErrorCode::NonMonotonicParams: return "non-monotonic-params";
        case ErrorCode::NonPositiveSpeed: return "nonpositive-speed";
        case ErrorCode::QueryOutOfRange: return "query-out-of-range";
        case ErrorCode::NonMonotonicX: return "non-monotonic-x";
        case ErrorCode::ShapeMismatch: return "shape-mismatch";
        case ErrorCode::RasterTooCoarse: return "raster-too-coarse";
        case ErrorCode::StaleCache: return "stale-cache";
        case ErrorCode::EmptyBandSet: return "empty-band-set";
        case ErrorCode::AxisCountMismatch: return "axis-count-mismatch";
        case ErrorCode::NoActiveTerms: return "no-active-terms";
        case ErrorCode::InfeasibleGrid: return "infeasible-grid";
        case ErrorCode::NonFiniteGradient: return "non-finite-gradient";
        case ErrorCode::TargetUnreachable: return "target-unreachable";
        case ErrorCode::NonTwoDimensional: return "non-2d-trajectory";
        case ErrorCode::NyquistViolation: return "nyquist-violation";
        case ErrorCode::ParseError: return "parse-error";
        case ErrorCode::IoError: return "io-error";
        case ErrorCode::MissingKey: return "missing-key";
    }
    return "unknown";
}

}  // namespace optiks
