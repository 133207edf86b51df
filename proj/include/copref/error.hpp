#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace copref {

enum class ErrorCode {
  // preference
  EmptyKeyword,
  TooLong,
  PanelFull,
  NoVideos,
  // ingest
  ParseError,
  DimensionMismatch,
  EmptyInput,
  CueOutOfRange,
  SegmentTooLarge,
  // guidelines
  SchemaError,
  OverlapError,
  WrongRole,
  // provider
  NoChunks,
  ProviderUnavailable,
  MalformedProviderOutput,
  GuidelineViolation,
  // consensus
  InvalidRole,
  WrongStage,
  WrongActor,
  EmptyModification,
  DuplicateKeyword,
  NoSuchConflict,
  NotFinalized,
  // service
  CodeExpired,
  CodeUsed,
  RoleTaken,
  UnknownCode,
  NotFound,
  Unauthorized,
  Forbidden,
  // general
  InvalidArgument,
  IoError,
};

std::string_view error_name(ErrorCode code) noexcept;

/// Validation failures are caller mistakes (bad input, wrong stage); the
/// rest are runtime conditions such as an unreachable provider or I/O.
bool is_validation_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace copref
