#include "vcdp/error.hpp"

namespace vcdp {

std::string_view error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::kIo: return "Io";
        case ErrorCode::kParse: return "Parse";
        case ErrorCode::kBadHeader: return "BadHeader";
        case ErrorCode::kInvalidSchema: return "InvalidSchema";
        case ErrorCode::kMissingCell: return "MissingCell";
        case ErrorCode::kDuplicateCell: return "DuplicateCell";
        case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
        case ErrorCode::kFractionOutOfRange: return "FractionOutOfRange";
        case ErrorCode::kInconsistentFraction: return "InconsistentFraction";
        case ErrorCode::kInconsistentMeta: return "InconsistentMeta";
        case ErrorCode::kSupplyMismatch: return "SupplyMismatch";
        case ErrorCode::kRankDeficient: return "RankDeficient";
        case ErrorCode::kInvalidBandwidth: return "InvalidBandwidth";
        case ErrorCode::kEmptySamples: return "EmptySamples";
        case ErrorCode::kInsufficientDays: return "InsufficientDays";
        case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
        case ErrorCode::kEmptyInput: return "EmptyInput";
        case ErrorCode::kNonPositiveSize: return "NonPositiveSize";
        case ErrorCode::kMissingPrePeriod: return "MissingPrePeriod";
        case ErrorCode::kUnidentifiedExposure: return "UnidentifiedExposure";
        case ErrorCode::kReplicateFailure: return "ReplicateFailure";
        case ErrorCode::kUnstableDynamics: return "UnstableDynamics";
        case ErrorCode::kInvalidConfig: return "InvalidConfig";
    }
    return "Unknown";
}

}  // namespace vcdp
