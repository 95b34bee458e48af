#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

#include <json.hpp>

#include "chainaudit/spec_index.hpp"
#include "chainaudit/text.hpp"

namespace chainaudit {

inline constexpr std::chrono::seconds kDefaultProbeTtl = std::chrono::hours(24 * 7);

/// Probe results keyed by (probe kind, subject) with a time-to-live. When a
/// file is attached, every put appends one JSON line; on open, later lines
/// win. Safe for concurrent use.
class ProbeCache {
 public:
  explicit ProbeCache(std::chrono::seconds ttl = kDefaultProbeTtl, Clock clock = system_now);
  /// Loads existing lines (malformed ones are ignored) and appends to the
  /// file from then on. Throws Error{IoError}.
  ProbeCache(const std::filesystem::path& file, std::chrono::seconds ttl = kDefaultProbeTtl, Clock clock = system_now);

  std::optional<nlohmann::json> get(const std::string& kind, const std::string& subject) const;
  void put(const std::string& kind, const std::string& subject, const nlohmann::json& value);
  std::size_t size() const;

 private:
  struct Entry {
    Timestamp stored_at;
    nlohmann::json value;
  };

  std::chrono::seconds ttl_;
  Clock clock_;
  std::optional<std::filesystem::path> file_;
  mutable std::mutex mu_;
  std::map<std::pair<std::string, std::string>, Entry> entries_;
};

}  // namespace chainaudit
