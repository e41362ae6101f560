#include "ergostop/errors.hpp"

namespace ergostop {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::NonStochasticRow: return "NonStochasticRow";
    case ErrorCode::NegativeEntry: return "NegativeEntry";
    case ErrorCode::EmptyStateSpace: return "EmptyStateSpace";
    case ErrorCode::BadGenerator: return "BadGenerator";
    case ErrorCode::SeriesNotConverged: return "SeriesNotConverged";
    case ErrorCode::NotIrreducible: return "NotIrreducible";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NoMixingDetected: return "NoMixingDetected";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::AugmentationTooLarge: return "AugmentationTooLarge";
    case ErrorCode::BadNesting: return "BadNesting";
    case ErrorCode::DriftNotNegative: return "DriftNotNegative";
    case ErrorCode::NotCertified: return "NotCertified";
    case ErrorCode::UnreachableRegion: return "UnreachableRegion";
    case ErrorCode::TooManyStates: return "TooManyStates";
    case ErrorCode::BoundViolated: return "BoundViolated";
    case ErrorCode::NoCoords: return "NoCoords";
    case ErrorCode::NoValidN: return "NoValidN";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ConflictingFlags: return "ConflictingFlags";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

bool is_verdict(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::DriftNotNegative:
    case ErrorCode::NoMixingDetected:
    case ErrorCode::NotCertified:
    case ErrorCode::BoundViolated:
    case ErrorCode::NotIrreducible:
    case ErrorCode::SingularSystem:
        return true;
    default:
        return false;
    }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace ergostop
