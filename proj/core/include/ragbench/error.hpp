#pragma once

#include <stdexcept>
#include <string>

namespace ragbench {

/// Category of a failed operation. Every error raised by this library
/// carries one of these codes so callers (and the CLI exit-code mapping)
/// can dispatch without string matching.
enum class ErrorCode {
  InvalidConfig,
  ParseError,
  SchemaError,
  DuplicateId,
  InvalidChunkParams,
  ProviderError,
  Timeout,
  EmptyCompletion,
  DimensionMismatch,
  MalformedModelOutput,
  MalformedJudgeOutput,
  EmptyCorpus,
  IoError,
  CorruptIndex,
  AllMasked,
  ZeroVector,
  DivergenceDetected,
  AllItemsFailed,
  Precondition,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ragbench
