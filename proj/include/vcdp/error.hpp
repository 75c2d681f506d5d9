#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vcdp {

enum class ErrorCode {
    kIo,
    kParse,
    kBadHeader,
    kInvalidSchema,
    kMissingCell,
    kDuplicateCell,
    kNonFiniteValue,
    kFractionOutOfRange,
    kInconsistentFraction,
    kInconsistentMeta,
    kSupplyMismatch,
    kRankDeficient,
    kInvalidBandwidth,
    kEmptySamples,
    kInsufficientDays,
    kDimensionMismatch,
    kEmptyInput,
    kNonPositiveSize,
    kMissingPrePeriod,
    kUnidentifiedExposure,
    kReplicateFailure,
    kUnstableDynamics,
    kInvalidConfig,
};

std::string_view error_code_name(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so that
/// callers (and the CLI) can branch on the kind of failure without parsing text.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace vcdp
