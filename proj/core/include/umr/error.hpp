#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace umr {

enum class Errc {
  kZeroVector,
  kDimensionMismatch,
  kInvalidConfig,
  kEmptyBatch,
  kEmptyPool,
  kUnknownId,
  kNoPositives,
  kNoJudgedQueries,
  kEmptyInput,
  kQuotaExceedsSource,
  kInvalidSpec,
  kDivergenceDetected,
  kNonFinite,
  kDuplicateId,
  // file and schema level
  kBadMagic,
  kVersionUnsupported,
  kTruncatedFile,
  kMalformedContainer,
  kSchema,
  kMissingFile,
  kIo,
};

std::string_view errc_name(Errc code) noexcept;

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it onto a stable exit status.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code), detail_(what) {}

  Errc code() const noexcept { return code_; }
  /// Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

/// Schema error tied to a location in a text input (manifest, qrels, jsonl).
class SchemaError : public Error {
 public:
  SchemaError(std::string source, std::size_t line, const std::string& msg)
      : Error(Errc::kSchema, source + ":" + std::to_string(line) + ": " + msg),
        source_(std::move(source)),
        line_(line) {}

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

}  // namespace umr
