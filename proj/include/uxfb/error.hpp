#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace uxfb {

/// Every failure the library reports is one of these kinds. Callers branch on
/// the kind; the message is for humans.
enum class ErrorKind {
  Io,
  Schema,
  DuplicateId,
  UnknownComment,
  UnknownLabel,
  EmptyCorpus,
  InvalidArgument,
  EmptyToken,
  DimensionMismatch,
  Parse,
  InvalidParams,
  NotRecorded,
  InvalidK,
  EmbeddingMismatch,
  FingerprintMismatch,
  LengthMismatch,
  OutOfRange,
  AllMissing,
  UnknownCategory,
  DegenerateTable,
  EmptyCondition,
  InvalidCounts,
  OverlappingSets,
  NotEligible,
  EndpointTimeout,
  EndpointError,
  ResponseSchema,
  InsufficientSupported,
  Config,
  NoResponses,
  ValidationFailed,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// One malformed field in an input file. Line numbers are 1-based.
struct SchemaIssue {
  std::size_t line = 0;
  std::string field;
  std::string message;
};

/// Raised by ingestion with every malformed row found, not just the first.
class SchemaError : public Error {
 public:
  explicit SchemaError(std::vector<SchemaIssue> issues);

  const std::vector<SchemaIssue>& issues() const noexcept { return issues_; }
  std::size_t line() const noexcept { return issues_.front().line; }
  const std::string& field() const noexcept { return issues_.front().field; }

 private:
  std::vector<SchemaIssue> issues_;
};

/// Line-addressed failure from the vector file reader (DimensionMismatch or Parse).
class LineError : public Error {
 public:
  LineError(ErrorKind kind, std::size_t line, const std::string& message);

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Non-2xx answer from the text-generation endpoint.
class EndpointStatusError : public Error {
 public:
  EndpointStatusError(int status, const std::string& body);

  int status() const noexcept { return status_; }

 private:
  int status_;
};

}  // namespace uxfb
