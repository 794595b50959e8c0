#include "uxfb/error.hpp"

namespace uxfb {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return "IoError";
    case ErrorKind::Schema: return "SchemaError";
    case ErrorKind::DuplicateId: return "DuplicateId";
    case ErrorKind::UnknownComment: return "UnknownComment";
    case ErrorKind::UnknownLabel: return "UnknownLabel";
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::EmptyToken: return "EmptyToken";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::NotRecorded: return "NotRecorded";
    case ErrorKind::InvalidK: return "InvalidK";
    case ErrorKind::EmbeddingMismatch: return "EmbeddingMismatch";
    case ErrorKind::FingerprintMismatch: return "FingerprintMismatch";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::AllMissing: return "AllMissing";
    case ErrorKind::UnknownCategory: return "UnknownCategory";
    case ErrorKind::DegenerateTable: return "DegenerateTable";
    case ErrorKind::EmptyCondition: return "EmptyCondition";
    case ErrorKind::InvalidCounts: return "InvalidCounts";
    case ErrorKind::OverlappingSets: return "OverlappingSets";
    case ErrorKind::NotEligible: return "NotEligible";
    case ErrorKind::EndpointTimeout: return "EndpointTimeout";
    case ErrorKind::EndpointError: return "EndpointError";
    case ErrorKind::ResponseSchema: return "ResponseSchemaError";
    case ErrorKind::InsufficientSupported: return "InsufficientSupported";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::NoResponses: return "NoResponses";
    case ErrorKind::ValidationFailed: return "ValidationFailed";
  }
  return "Error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

namespace {

std::string describe(const std::vector<SchemaIssue>& issues) {
  std::string out;
  for (const auto& issue : issues) {
    if (!out.empty()) out += '\n';
    out += "line " + std::to_string(issue.line) + ": field '" + issue.field + "': " + issue.message;
  }
  return out;
}

}  // namespace

SchemaError::SchemaError(std::vector<SchemaIssue> issues)
    : Error(ErrorKind::Schema, describe(issues)), issues_(std::move(issues)) {
  if (issues_.empty()) issues_.push_back({0, "", "unspecified schema error"});
}

LineError::LineError(ErrorKind kind, std::size_t line, const std::string& message)
    : Error(kind, "line " + std::to_string(line) + ": " + message), line_(line) {}

EndpointStatusError::EndpointStatusError(int status, const std::string& body)
    : Error(ErrorKind::EndpointError,
            "endpoint returned HTTP " + std::to_string(status) + (body.empty() ? "" : ": " + body)),
      status_(status) {}

}  // namespace uxfb
