#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ergostop {

enum class ErrorCode {
    NonStochasticRow,
    NegativeEntry,
    EmptyStateSpace,
    BadGenerator,
    SeriesNotConverged,
    NotIrreducible,
    DimensionMismatch,
    InvalidArgument,
    NoMixingDetected,
    SingularSystem,
    AugmentationTooLarge,
    BadNesting,
    DriftNotNegative,
    NotCertified,
    UnreachableRegion,
    TooManyStates,
    BoundViolated,
    NoCoords,
    NoValidN,
    ParseError,
    ConflictingFlags,
    IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

// Verdict-class errors mean the inputs were well formed but a standing
// assumption of the stopping problem fails (or a certificate check did).
bool is_verdict(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace ergostop
