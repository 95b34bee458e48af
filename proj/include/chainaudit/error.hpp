#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace chainaudit {

enum class ErrorCode {
  // bundle scanning
  NotADirectory,
  IoError,
  // property lists
  MalformedPlist,
  UnsupportedObject,
  // manifests
  MalformedLock,
  MalformedJson,
  UnknownSchemaVersion,
  MalformedRequirement,
  // spec index
  EmptyTree,
  FormatVersionMismatch,
  // resolution
  WrongManifestKind,
  UnsatisfiableRequirements,
  // probes
  TransportError,
  RateLimited,
  NotADomain,
  PublicSuffixOnly,
  MalformedResponse,
  UnexpectedNetworkAccess,
  // risk engine
  MissingProbe,
  // archives
  MalformedArchive,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so that
/// callers can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class RateLimitedError : public Error {
 public:
  RateLimitedError(std::int64_t reset_epoch, const std::string& message);

  std::int64_t reset_epoch() const noexcept { return reset_epoch_; }

 private:
  std::int64_t reset_epoch_;
};

/// IoError raised while reading a binary file, annotated with the byte offset
/// where reading stopped.
class IoErrorAt : public Error {
 public:
  IoErrorAt(std::uint64_t offset, const std::string& message);

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace chainaudit
