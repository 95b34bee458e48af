#include "chainaudit/error.hpp"

namespace chainaudit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotADirectory: return "NotADirectory";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::MalformedPlist: return "MalformedPlist";
    case ErrorCode::UnsupportedObject: return "UnsupportedObject";
    case ErrorCode::MalformedLock: return "MalformedLock";
    case ErrorCode::MalformedJson: return "MalformedJson";
    case ErrorCode::UnknownSchemaVersion: return "UnknownSchemaVersion";
    case ErrorCode::MalformedRequirement: return "MalformedRequirement";
    case ErrorCode::EmptyTree: return "EmptyTree";
    case ErrorCode::FormatVersionMismatch: return "FormatVersionMismatch";
    case ErrorCode::WrongManifestKind: return "WrongManifestKind";
    case ErrorCode::UnsatisfiableRequirements: return "UnsatisfiableRequirements";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::NotADomain: return "NotADomain";
    case ErrorCode::PublicSuffixOnly: return "PublicSuffixOnly";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::UnexpectedNetworkAccess: return "UnexpectedNetworkAccess";
    case ErrorCode::MissingProbe: return "MissingProbe";
    case ErrorCode::MalformedArchive: return "MalformedArchive";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

RateLimitedError::RateLimitedError(std::int64_t reset_epoch, const std::string& message)
    : Error(ErrorCode::RateLimited, message), reset_epoch_(reset_epoch) {}

IoErrorAt::IoErrorAt(std::uint64_t offset, const std::string& message)
    : Error(ErrorCode::IoError, message + " (byte offset " + std::to_string(offset) + ")"),
      offset_(offset) {}

}  // namespace chainaudit
