#include "umr/error.hpp"

namespace umr {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::kZeroVector: return "ZeroVector";
    case Errc::kDimensionMismatch: return "DimensionMismatch";
    case Errc::kInvalidConfig: return "InvalidConfig";
    case Errc::kEmptyBatch: return "EmptyBatch";
    case Errc::kEmptyPool: return "EmptyPool";
    case Errc::kUnknownId: return "UnknownId";
    case Errc::kNoPositives: return "NoPositives";
    case Errc::kNoJudgedQueries: return "NoJudgedQueries";
    case Errc::kEmptyInput: return "EmptyInput";
    case Errc::kQuotaExceedsSource: return "QuotaExceedsSource";
    case Errc::kInvalidSpec: return "InvalidSpec";
    case Errc::kDivergenceDetected: return "DivergenceDetected";
    case Errc::kNonFinite: return "NonFinite";
    case Errc::kDuplicateId: return "DuplicateId";
    case Errc::kBadMagic: return "BadMagic";
    case Errc::kVersionUnsupported: return "VersionUnsupported";
    case Errc::kTruncatedFile: return "TruncatedFile";
    case Errc::kMalformedContainer: return "MalformedContainer";
    case Errc::kSchema: return "SchemaError";
    case Errc::kMissingFile: return "MissingFile";
    case Errc::kIo: return "IoError";
  }
  return "Unknown";
}

}  // namespace umr
