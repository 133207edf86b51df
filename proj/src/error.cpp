#include "copref/error.hpp"

namespace copref {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyKeyword: return "EmptyKeyword";
    case ErrorCode::TooLong: return "TooLong";
    case ErrorCode::PanelFull: return "PanelFull";
    case ErrorCode::NoVideos: return "NoVideos";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::CueOutOfRange: return "CueOutOfRange";
    case ErrorCode::SegmentTooLarge: return "SegmentTooLarge";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::OverlapError: return "OverlapError";
    case ErrorCode::WrongRole: return "WrongRole";
    case ErrorCode::NoChunks: return "NoChunks";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::MalformedProviderOutput: return "MalformedProviderOutput";
    case ErrorCode::GuidelineViolation: return "GuidelineViolation";
    case ErrorCode::InvalidRole: return "InvalidRole";
    case ErrorCode::WrongStage: return "WrongStage";
    case ErrorCode::WrongActor: return "WrongActor";
    case ErrorCode::EmptyModification: return "EmptyModification";
    case ErrorCode::DuplicateKeyword: return "DuplicateKeyword";
    case ErrorCode::NoSuchConflict: return "NoSuchConflict";
    case ErrorCode::NotFinalized: return "NotFinalized";
    case ErrorCode::CodeExpired: return "CodeExpired";
    case ErrorCode::CodeUsed: return "CodeUsed";
    case ErrorCode::RoleTaken: return "RoleTaken";
    case ErrorCode::UnknownCode: return "UnknownCode";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::Unauthorized: return "Unauthorized";
    case ErrorCode::Forbidden: return "Forbidden";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

bool is_validation_error(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ProviderUnavailable:
    case ErrorCode::MalformedProviderOutput:
    case ErrorCode::GuidelineViolation:
    case ErrorCode::IoError:
      return false;
    default:
      return true;
  }
}

void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace copref
